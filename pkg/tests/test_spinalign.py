import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distillkit.families import partially_erasing
from distillkit.qcore import (
    DensityOperator,
    entropy_of,
    kron_all,
    random_density_matrix,
    random_pure_state,
)
from distillkit.spinalign import (
    AlignmentInstance,
    BudgetError,
    adjoint_composition,
    adjoint_composition_kraus,
    aligned_inputs,
    aligned_instance,
    aligned_value,
    alignment_objective,
    bitstrings,
    conjecture_search,
    n1_alignment_check,
    overlap_counts,
    renyi2_constants,
    renyi2_objective,
    renyi2_overlap_bound,
)


def dm(m):
    m = np.asarray(m, dtype=complex)
    return DensityOperator(m, [m.shape[0]])


def pure(v):
    v = np.asarray(v, dtype=complex)
    return dm(np.outer(v, v.conj()))


def random_inputs(s0, s1, n, rng, entangled=True):
    d0, d1 = s0.dim, s1.dim
    out = {}
    for bits in bitstrings(n):
        dims = [d0 if b == 0 else d1 for b in bits]
        if entangled:
            m = random_density_matrix(int(np.prod(dims)), rng=rng)
        else:
            m = kron_all(random_density_matrix(d, rng=rng) for d in dims)
        out[bits] = DensityOperator(m, dims)
    return out


def test_bitstrings_order():
    assert bitstrings(2) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_objective_single_branch():
    rng = np.random.default_rng(0)
    s0, s1 = dm(random_density_matrix(2, rng=rng)), dm(random_density_matrix(3, rng=rng))
    rho = dm(random_density_matrix(2, rng=rng))
    inst = AlignmentInstance(1, [1.0, 0.0], s0, s1, {(0,): rho})
    assert abs(alignment_objective(inst) - entropy_of(rho.matrix) - entropy_of(s1.matrix)) < 1e-10


def test_objective_pure_aligned_is_zero():
    zero = dm(np.diag([1.0, 0]))
    inst = aligned_instance(zero, zero, 1, [0.5, 0.5])
    assert abs(alignment_objective(inst)) < 1e-12


def test_objective_maximally_mixed_dense_oracle():
    half = dm(np.eye(2) / 2)
    inst = aligned_instance(half, half, 1, [0.5, 0.5])
    e0 = np.diag([1.0, 0])
    dense = 0.5 * np.kron(e0, np.eye(2) / 2) + 0.5 * np.kron(np.eye(2) / 2, e0)
    w = np.linalg.eigvalsh(dense)
    w = w[w > 1e-15]
    assert abs(alignment_objective(inst) + np.sum(w * np.log2(w))) < 1e-12


def test_objective_rejects_wrong_dims():
    s0, s1 = dm(np.eye(2) / 2), dm(np.eye(3) / 3)
    with pytest.raises(ValueError):
        AlignmentInstance(1, [0.5, 0.5], s0, s1, {(0,): dm(np.eye(3) / 3), (1,): dm(np.eye(3) / 3)})
    with pytest.raises(ValueError):
        AlignmentInstance(1, [0.5, 0.6], s0, s1, {})


def test_aligned_inputs_examples():
    a = aligned_inputs(dm(np.diag([0.7, 0.3])), dm(np.diag([0.2, 0.8])), 1)
    assert np.allclose(a[(0,)].matrix, np.diag([1, 0]))
    assert np.allclose(a[(1,)].matrix, np.diag([0, 1]))
    a = aligned_inputs(dm(np.eye(2) / 2), dm(np.eye(2) / 2), 1)
    assert np.allclose(a[(0,)].matrix, np.diag([1, 0]))
    a = aligned_inputs(dm(np.diag([0.7, 0.3])), dm(np.diag([0.2, 0.8])), 2)
    assert sorted(a) == bitstrings(2)
    assert np.allclose(a[(0, 1)].matrix, np.kron(np.diag([1, 0]), np.diag([0, 1])))


def test_aligned_value_pure_single_branch_equals_fixed_entropy():
    rng = np.random.default_rng(1)
    s0 = dm(random_density_matrix(2, rng=rng))
    s1 = dm(random_density_matrix(2, rng=rng))
    p = np.zeros(4)
    p[2] = 1.0  # all weight on (1, 0)
    expected = entropy_of(s0.matrix) + entropy_of(s1.matrix)
    assert abs(aligned_value(s0, s1, 2, p) - expected) < 1e-10
    rep = conjecture_search(s0, s1, 2, p, trials=20, seed=0, iterations=30)
    assert abs(rep.worst_gap) < 1e-9


def test_n1_check_pure_sigmas():
    rep = n1_alignment_check(pure([1, 0]), pure([0.6, 0.8]), 0.4, trials=40, seed=0)
    assert rep.worst_gap >= -1e-9


def test_n1_check_reference_instance():
    rep = n1_alignment_check(dm(np.diag([0.9, 0.1])), dm(np.diag([0.6, 0.4])), 0.5, trials=200, seed=3)
    assert rep.worst_gap >= -1e-9
    assert not rep.candidate


def test_n1_check_single_branch():
    s1 = dm(np.diag([0.6, 0.4]))
    rep = n1_alignment_check(dm(np.diag([0.9, 0.1])), s1, 1.0, trials=20, seed=0)
    assert abs(rep.aligned_value - entropy_of(s1.matrix)) < 1e-12
    assert abs(rep.worst_gap) < 1e-9
    with pytest.raises(ValueError):
        n1_alignment_check(s1, s1, 1.5, trials=2)


def test_search_is_deterministic():
    s0, s1 = dm(np.diag([0.8, 0.2])), dm(np.diag([0.7, 0.3]))
    a = conjecture_search(s0, s1, 2, [0.25] * 4, trials=8, seed=5, iterations=20)
    b = conjecture_search(s0, s1, 2, [0.25] * 4, trials=8, seed=5, iterations=20)
    assert a.worst_gap == b.worst_gap and a.worst_trial == b.worst_trial
    for k in a.argmin:
        assert np.array_equal(a.argmin[k], b.argmin[k])


def test_search_budget():
    s = dm(np.eye(3) / 3)
    with pytest.raises(BudgetError):
        conjecture_search(s, s, 3, np.full(8, 1 / 8), trials=1, budget_dim=256)


def test_search_reports_reachable_value():
    s0, s1 = dm(np.diag([0.8, 0.2])), dm(np.diag([0.7, 0.3]))
    p = [0.1, 0.2, 0.3, 0.4]
    rep = conjecture_search(s0, s1, 2, p, trials=6, seed=2, iterations=30)
    inputs = {bits: pure(v.reshape(-1)) for bits, v in rep.argmin.items()}
    inst = AlignmentInstance(2, p, s0, s1, inputs)
    assert abs(alignment_objective(inst) - rep.best_value) < 1e-9


def test_mixed_inputs_never_beat_dominant_eigenvector():
    # concavity: replacing a mixed input by its top eigenvector cannot raise the minimum
    rng = np.random.default_rng(4)
    s0, s1 = dm(random_density_matrix(2, rng=rng)), dm(random_density_matrix(2, rng=rng))
    rep = n1_alignment_check(s0, s1, 0.3, trials=50, seed=1)
    for _ in range(20):
        inputs = random_inputs(s0, s1, 1, rng)
        inst = AlignmentInstance(1, [0.3, 0.7], s0, s1, inputs)
        assert alignment_objective(inst) >= rep.best_value - 1e-9


def test_renyi2_examples():
    zero = dm(np.diag([1.0, 0]))
    inst = AlignmentInstance(1, [1.0, 0.0], zero, zero, {(0,): zero})
    assert abs(renyi2_objective(inst).entropy) < 1e-12
    half = dm(np.eye(2) / 2)
    inst = aligned_instance(half, half, 1, [0.5, 0.5])
    e0 = np.diag([1.0, 0])
    dense = 0.5 * np.kron(e0, np.eye(2) / 2) + 0.5 * np.kron(np.eye(2) / 2, e0)
    assert abs(renyi2_objective(inst).entropy + np.log2(np.trace(dense @ dense))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 2), d0=st.integers(2, 3), d1=st.integers(2, 3))
def test_renyi2_cross_expansion_and_alignment(seed, n, d0, d1):
    rng = np.random.default_rng(seed)
    s0, s1 = dm(random_density_matrix(d0, rng=rng)), dm(random_density_matrix(d1, rng=rng))
    p = rng.dirichlet(np.ones(2**n))
    inst = AlignmentInstance(n, p, s0, s1, random_inputs(s0, s1, n, rng))
    val = renyi2_objective(inst)
    assert abs(val.purity - val.cross_purity) < 1e-12
    ref = renyi2_objective(aligned_instance(s0, s1, n, p))
    assert val.entropy >= ref.entropy - 1e-9


def test_overlap_bound_examples():
    rng = np.random.default_rng(5)
    s0, s1 = dm(random_density_matrix(2, rng=rng)), dm(random_density_matrix(3, rng=rng))
    l0, l1, a0, a1 = renyi2_constants(s0, s1)
    assert abs(renyi2_overlap_bound((0, 0, 0), (0, 0, 0), s0, s1) - a1**3) < 1e-15
    assert abs(renyi2_overlap_bound((0,), (1,), s0, s1) - l0 * l1) < 1e-15
    assert overlap_counts((0, 1, 1), (1, 1, 0)) == {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 1}
    with pytest.raises(ValueError):
        overlap_counts((0,), (0, 1))


@pytest.mark.parametrize("x, y", list(itertools.product(bitstrings(2), repeat=2)))
def test_overlap_bound_attained_by_aligned_inputs(x, y):
    rng = np.random.default_rng(6)
    s0, s1 = dm(random_density_matrix(3, rng=rng)), dm(random_density_matrix(2, rng=rng))
    a = aligned_inputs(s0, s1, 2)
    from distillkit.families import erasing_output

    ox = erasing_output(a[x].matrix, x, s0.matrix, s1.matrix)
    oy = erasing_output(a[y].matrix, y, s0.matrix, s1.matrix)
    assert abs(np.trace(ox @ oy).real - renyi2_overlap_bound(x, y, s0, s1)) < 1e-12


def test_adjoint_composition_examples():
    rng = np.random.default_rng(7)
    s0, s1 = random_density_matrix(2, rng=rng), random_density_matrix(3, rng=rng)
    x = random_density_matrix(2, rng=rng)
    a1 = np.trace(s1 @ s1).real
    assert np.allclose(adjoint_composition(0, 0, s0, s1, x), a1 * x)
    assert np.allclose(adjoint_composition(0, 1, s0, s1, s1), a1 * s0)
    assert np.allclose(adjoint_composition(1, 0, s0, s1, np.eye(2)), s1)


@pytest.mark.parametrize("a, b", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_adjoint_composition_matches_kraus(a, b):
    rng = np.random.default_rng(8)
    s0, s1 = random_density_matrix(2, rng=rng), random_density_matrix(3, rng=rng)
    x = random_density_matrix(2 if b == 0 else 3, rng=rng)
    assert np.linalg.norm(adjoint_composition(a, b, s0, s1, x) - adjoint_composition_kraus(a, b, s0, s1, x)) < 1e-12


def test_partially_erasing_product_channel_on_product_input():
    rng = np.random.default_rng(9)
    s0, s1 = dm(random_density_matrix(2, rng=rng)), dm(random_density_matrix(2, rng=rng))
    v = random_pure_state(2, rng)
    out = partially_erasing(s0, s1, 0)(np.outer(v, v.conj()))
    assert np.allclose(out, np.kron(np.outer(v, v.conj()), s1.matrix))
