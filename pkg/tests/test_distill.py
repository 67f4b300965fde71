import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from distillkit.channels import (
    Instrument,
    KrausMap,
    choi_of_map,
    instrument_coherent_info,
    map_of_choi,
    random_instrument,
)
from distillkit.distill import (
    BudgetError,
    ad_closed_form,
    coherent_info_of_input,
    complete_filter,
    d1_hat,
    d1_lower_bound,
    degradability_residual,
    degrading_residual_of,
    rho_s_closed_form,
    filter_coherent_info,
    gds_single_letter_check,
    info_degradable_falsify,
    less_noisy_falsify,
    orthogonal_mixture,
    q1_channel,
    tensor_instrument,
    tensor_power,
)
from distillkit.families import (
    GdsSpec,
    ad_choi,
    amplitude_damping,
    flagged_ad_choi,
    gds_channel,
    gds_restricted,
    gds_sigma0,
    rho_s,
    rho_s_components,
)
from distillkit.qcore import (
    DensityOperator,
    coherent_information,
    mutual_information,
    random_density_matrix,
    random_unitary,
)


def h_mp(p):
    getcontext().prec = 40
    p = Decimal(repr(p))
    if p in (0, 1):
        return Decimal(0)
    q = 1 - p
    return -(p * p.ln() + q * q.ln()) / Decimal(2).ln()


def rho_s_mp(s):
    val = Decimal(2) / 3 * (h_mp(s / 2) - h_mp((1 + s) / 2))
    return float(max(val, Decimal(0)))


@pytest.mark.parametrize("s", [0.0, 0.2, 0.5, 0.6, 0.8, 1.0])
def test_rho_s_closed_form_against_high_precision(s):
    assert abs(rho_s_closed_form(s) - rho_s_mp(s)) < 1e-12


def test_rho_s_closed_form_examples():
    assert abs(rho_s_closed_form(1.0) - 2 / 3) < 1e-15
    assert rho_s_closed_form(0.0) == 0.0
    assert abs(rho_s_closed_form(0.8) - 0.3346) < 1e-4
    with pytest.raises(ValueError):
        rho_s_closed_form(1.5)


@pytest.mark.parametrize("g", [0.1, 0.2, 0.3, 0.7])
def test_ad_closed_form_matches_coherent_information(g):
    assert abs(ad_closed_form(g) - coherent_information(ad_choi(g), "R", "B")) < 1e-12


def test_d1_lower_bound_degradable():
    rep = d1_lower_bound(ad_choi(0.2), restarts=4, seed=0)
    target = float(h_mp(0.4) - h_mp(0.1))
    assert abs(rep.value - target) < 1e-3
    assert abs(rep.trivial_value - target) < 1e-12
    assert abs(instrument_coherent_info(rep.argument, ad_choi(0.2)) - rep.value) < 1e-9


def test_d1_lower_bound_antidegradable():
    rep = d1_lower_bound(ad_choi(0.8), restarts=4, seed=0)
    assert rep.value <= 1e-3
    assert rep.value >= 0.0


def test_d1_lower_bound_rho_s():
    rep = d1_lower_bound(rho_s(0.8), restarts=4, seed=0)
    assert abs(rep.value - rho_s_mp(0.8)) < 1e-3
    assert abs(instrument_coherent_info(rep.argument, rho_s(0.8)) - rep.value) < 1e-9


def test_d1_lower_bound_deterministic():
    a = d1_lower_bound(ad_choi(0.3), restarts=3, seed=11)
    b = d1_lower_bound(ad_choi(0.3), restarts=3, seed=11)
    assert a.value == b.value and a.history == b.history


def test_d1_lower_bound_rejects_bad_sizes():
    with pytest.raises(ValueError):
        d1_lower_bound(ad_choi(0.3), outcomes=0)
    with pytest.raises(ValueError):
        d1_lower_bound(DensityOperator(np.eye(2) / 2, [2]))


def test_d1_hat_examples():
    bell = DensityOperator(np.outer([1, 0, 0, 1], [1, 0, 0, 1]) / 2, (2, 2))
    assert abs(d1_hat(bell, restarts=2).value - 1) < 1e-6
    rng = np.random.default_rng(0)
    prod = DensityOperator(np.kron(random_density_matrix(2, rng=rng), random_density_matrix(2, rng=rng)), (2, 2))
    assert abs(d1_hat(prod, restarts=4).value) < 1e-3


def test_d1_hat_matches_channel_value_for_damping():
    a = d1_hat(ad_choi(0.2), restarts=4).value
    b = q1_channel(amplitude_damping(0.2), restarts=4).value
    assert abs(a - b) < 1e-3
    assert abs(a - 0.5062) < 1e-3


def test_d1_hat_argument_reevaluates():
    rho = ad_choi(0.25)
    rep = d1_hat(rho, restarts=3)
    assert abs(np.linalg.norm(rep.argument, 2) - 1) < 1e-12
    assert abs(filter_coherent_info(rho, rep.argument) - rep.value) < 1e-9


def test_filter_relaxation_dominates_instruments():
    rng = np.random.default_rng(1)
    rho = DensityOperator(random_density_matrix(4, rng=rng), (2, 2))
    lower = d1_lower_bound(rho, restarts=4).value
    upper = d1_hat(rho, restarts=4).value
    assert lower <= upper + 1e-6


def test_q1_channel_examples():
    rep = q1_channel(KrausMap([np.eye(3)]), restarts=2)
    assert abs(rep.value - math.log2(3)) < 1e-6
    assert abs(q1_channel(amplitude_damping(0.5), restarts=4).value) < 1e-3
    rep = q1_channel(amplitude_damping(0.1), restarts=2)
    assert abs(coherent_info_of_input(amplitude_damping(0.1), rep.argument) - rep.value) < 1e-9


def test_q1_channel_on_gds_matches_restricted():
    spec = GdsSpec(1, 1, 1, 1)
    full = q1_channel(gds_channel(spec), restarts=4).value
    restricted = q1_channel(gds_restricted(spec), restarts=4).value
    assert abs(full - restricted) < 1e-3


def test_isometry_invariance_of_optimizers():
    rng = np.random.default_rng(2)
    rho = ad_choi(0.3)
    u = np.kron(random_unitary(2, rng), random_unitary(2, rng))
    rot = DensityOperator(u @ rho.matrix @ u.conj().T, (2, 2))
    assert abs(d1_lower_bound(rho, restarts=3).value - d1_lower_bound(rot, restarts=3).value) < 1e-3
    assert abs(d1_hat(rho, restarts=3).value - d1_hat(rot, restarts=3).value) < 1e-3


def test_data_processing_on_degradable_state():
    rng = np.random.default_rng(3)
    rho = ad_choi(0.2)
    base = coherent_information(rho, "R", "B")
    for _ in range(20):
        t = random_instrument(2, 2, int(rng.integers(1, 5)), rng)
        assert instrument_coherent_info(t, rho) <= base + 1e-9


@pytest.mark.parametrize(
    "rho, direction",
    [(ad_choi(0.2), "degradable"), (ad_choi(0.8), "antidegradable"), (gds_sigma0(2, 2), "degradable")],
)
def test_degradability_residual_known_cases(rho, direction):
    rep = degradability_residual(rho, direction, restarts=2)
    assert rep.numerically_degradable
    assert rep.degrading_map.trace_preserving
    assert abs(degrading_residual_of(rho, rep) - rep.residual) < 1e-9


def test_degradability_residual_detects_failure():
    rep = degradability_residual(ad_choi(0.8), "degradable", restarts=1)
    assert rep.residual > 1e-3
    assert abs(degrading_residual_of(ad_choi(0.8), rep) - rep.residual) < 1e-9
    with pytest.raises(ValueError):
        degradability_residual(ad_choi(0.2), "sideways")


def test_flagged_symmetric_point_is_degradable_both_ways():
    # damping 0.9 is complementary to damping 0.1, so equal flag weights give a B<->E symmetric state
    rho = flagged_ad_choi(0.5, 0.1, 0.9)
    assert abs(mutual_information(rho, "R", ["B", "F"]) - 1) < 1e-9
    assert degradability_residual(rho, "degradable", restarts=1).residual < 1e-6


def test_flagged_asymmetric_point_is_not_degradable():
    rho = flagged_ad_choi(0.3, 0.2, 0.7)
    rep = degradability_residual(rho, "degradable", restarts=1, max_nfev=200)
    assert rep.residual > 1e-3


def test_info_degradable_falsify():
    rep = info_degradable_falsify(ad_choi(0.2), samples=200, seed=0)
    assert rep.worst_gap >= -1e-6 and not rep.violated
    rep = info_degradable_falsify(ad_choi(0.8), samples=20, seed=0)
    assert rep.violated
    rho = ad_choi(0.6)
    rep = info_degradable_falsify(rho, samples=1)
    # the identity pre-channel reduces to I(A;B) - I(A;E) = 2 I(A>B)
    assert abs(rep.worst_gap - 2 * coherent_information(rho, "R", "B")) < 1e-10


def test_less_noisy_falsify():
    rep = less_noisy_falsify(ad_choi(0.3), samples=1)
    assert abs(rep.worst_gap) < 1e-12
    rep = less_noisy_falsify(ad_choi(0.2), samples=200, seed=0)
    assert rep.worst_gap >= -1e-6
    rep = less_noisy_falsify(ad_choi(0.8), samples=50, seed=0)
    assert rep.violated


def test_less_noisy_budget():
    with pytest.raises(BudgetError):
        less_noisy_falsify(ad_choi(0.3), n=5, samples=1, budget_dim=256)
    assert tensor_power(ad_choi(0.3), 2).dims == (4, 4)


def test_tensor_power_coherent_info_is_additive():
    rho = ad_choi(0.3)
    two = tensor_power(rho, 2)
    assert abs(coherent_information(two, "A", "B") - 2 * coherent_information(rho, "R", "B")) < 1e-10


def rho_s_parts(s):
    useful, junk = rho_s_components(s)
    return DensityOperator(useful, (3, 3)), DensityOperator(junk, (3, 3))


def test_orthogonal_mixture_rho_s():
    u, j = rho_s_parts(0.7)
    cert = orthogonal_mixture(u, j, 2 / 3)
    assert np.linalg.norm(cert.state.matrix - rho_s(0.7).matrix) < 1e-12
    p0, p1 = cert.projectors
    assert np.allclose(p0, np.diag([1, 1, 0]))
    v = cert.flag_isometry
    assert np.allclose(v.conj().T @ v, np.eye(3))


def test_orthogonal_mixture_value_is_convex_combination():
    u, j = rho_s_parts(0.8)
    r0 = d1_lower_bound(u, restarts=4)
    r1 = d1_lower_bound(j, restarts=2)
    cert = orthogonal_mixture(u, j, 2 / 3, instruments=(r0.argument, r1.argument))
    val = instrument_coherent_info(cert.instrument, cert.state)
    assert abs(val - (2 / 3 * r0.value + 1 / 3 * r1.value)) < 1e-6


def test_orthogonal_mixture_edge_and_error():
    u, j = rho_s_parts(0.5)
    cert = orthogonal_mixture(u, u, 1.0)
    assert np.allclose(cert.state.matrix, u.matrix)
    with pytest.raises(ValueError):
        orthogonal_mixture(u, u, 0.5)


@pytest.mark.parametrize("seed", range(5))
def test_complete_filter_is_complete_and_positive(seed):
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    t = complete_filter(k)
    total = sum(x.conj().T @ x for x in t.kraus_ops)
    assert np.linalg.norm(total - np.eye(2)) < 1e-10
    rho = ad_choi(0.2)
    if filter_coherent_info(rho, k) > 0.01:
        assert instrument_coherent_info(t, rho) > 0


def test_tensor_instrument_is_complete():
    t = tensor_instrument(Instrument([(0, np.diag([1.0, 0])), (1, np.diag([0, 1.0]))]), 2)
    assert len(t) == 4 and t.complete
    assert t.labels[1] == (0, 1)


def test_gds_check_small():
    rep = gds_single_letter_check(2, 1, n=1, restarts=2, degrade_restarts=1)
    assert rep.canonical_ok and rep.optimizer_ok and rep.sigma0_degradable
    assert rep.ok
    with pytest.raises(BudgetError):
        gds_single_letter_check(2, 2, n=3, restarts=1)


def test_map_of_choi_q1_agrees_with_d1_hat_random():
    rng = np.random.default_rng(4)
    rho = DensityOperator(random_density_matrix(6, rng=rng), (2, 3))
    a = d1_hat(rho, restarts=4).value
    b = q1_channel(map_of_choi(rho), restarts=4).value
    assert abs(a - b) < 1e-3
    assert choi_of_map(map_of_choi(rho)).dims == (2, 3)
