import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distillkit.majorization import (
    down_arrow,
    majorizes,
    pinch,
    pinch_array,
    spectrum_of,
    tensor_rearrangement_check,
)
from distillkit.qcore import (
    DensityOperator,
    Spectrum,
    StateError,
    entropy_of,
    ptrace,
    random_density_matrix,
    random_unitary,
    von_neumann_entropy,
)


def random_psd(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return g @ g.conj().T


def test_majorizes_examples():
    assert majorizes(Spectrum([0.5, 0.5]), Spectrum([1.0, 0.0]))
    assert not majorizes(Spectrum([1.0, 0.0]), Spectrum([0.5, 0.5]))
    assert majorizes(Spectrum([0.25] * 4), Spectrum([0.4, 0.3, 0.2, 0.1]))


def test_majorizes_pads_and_checks_totals():
    assert majorizes(Spectrum([0.5, 0.5]), Spectrum([1.0]))
    assert not majorizes(Spectrum([0.5, 0.4]), Spectrum([1.0]))


def test_down_arrow_examples():
    assert np.allclose(down_arrow(np.diag([0.2, 0.8])), np.diag([0.8, 0.2]))
    rng = np.random.default_rng(0)
    u = random_unitary(4, rng)
    p = u @ np.diag([1, 1, 0, 0]) @ u.conj().T
    assert np.allclose(down_arrow(p), np.diag([1, 1, 0, 0]), atol=1e-12)
    h = random_psd(3, rng) - np.eye(3)
    assert np.allclose(np.sort(np.diag(down_arrow(h)))[::-1], np.sort(np.linalg.eigvalsh(h))[::-1], atol=1e-12)
    with pytest.raises(ValueError):
        down_arrow(np.array([[0, 1], [0, 0]]))


def test_rearrangement_examples():
    rng = np.random.default_rng(1)
    b1, c1 = random_psd(2, rng), random_psd(3, rng)
    z2, z3 = np.zeros((2, 2)), np.zeros((3, 3))
    lhs, rhs, ok = tensor_rearrangement_check(b1, z2, c1, z3)
    assert ok and np.allclose(lhs.values, rhs.values, atol=1e-10)
    b1, b2 = np.diag([3.0, 1.0]), np.diag([2.0, 0.5])
    c1, c2 = np.diag([1.0, 0.2]), np.diag([0.7, 0.1])
    lhs, rhs, ok = tensor_rearrangement_check(b1, b2, c1, c2)
    assert ok and np.allclose(lhs.values, rhs.values)
    with pytest.raises(StateError):
        tensor_rearrangement_check(-np.eye(2), b2, c1, c2)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), db=st.integers(1, 4), dc=st.integers(1, 4))
def test_rearrangement_majorization_property(seed, db, dc):
    rng = np.random.default_rng(seed)
    mats = [random_psd(db, rng), random_psd(db, rng), random_psd(dc, rng), random_psd(dc, rng)]
    lhs, rhs, ok = tensor_rearrangement_check(*mats)
    assert ok
    assert abs(lhs.values.sum() - rhs.values.sum()) < 1e-9


def test_pinch_examples():
    z = [np.diag([1.0, 0]), np.diag([0, 1.0])]
    rho = DensityOperator(np.diag([0.3, 0.7]), [2])
    assert np.allclose(pinch(rho, z).matrix, rho.matrix)
    plus = DensityOperator(np.full((2, 2), 0.5), [2])
    out = pinch(plus, z)
    assert np.allclose(out.matrix, np.eye(2) / 2)
    assert von_neumann_entropy(plus) < 1e-12
    assert abs(von_neumann_entropy(out) - 1) < 1e-12


def test_pinch_rejects_invalid_projectors():
    rho = DensityOperator(np.eye(2) / 2, [2])
    with pytest.raises(ValueError):
        pinch(rho, [np.diag([1.0, 0])])
    with pytest.raises(ValueError):
        pinch(rho, [np.eye(2), np.diag([1.0, 0])])
    with pytest.raises(ValueError):
        pinch(rho, [np.diag([0.5, 0.5]), np.diag([0.5, 0.5])])


def block_split(d, k, rng):
    u = random_unitary(d, rng)
    p = u[:, :k] @ u[:, :k].conj().T
    return [p, np.eye(d) - p]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 5))
def test_pinch_properties(seed, d):
    rng = np.random.default_rng(seed)
    rho = DensityOperator(random_density_matrix(d, rng=rng), [d])
    ps = block_split(d, int(rng.integers(1, d)), rng)
    out = pinch(rho, ps)
    assert von_neumann_entropy(out) >= von_neumann_entropy(rho) - 1e-10
    assert abs(np.trace(out.matrix) - 1) < 1e-12
    assert np.linalg.norm(pinch(out, ps).matrix - out.matrix) < 1e-12


def test_pinch_on_subsystem_commutes_with_partial_trace():
    rng = np.random.default_rng(2)
    rho = DensityOperator(random_density_matrix(6, rng=rng), [2, 3], ["A", "B"])
    ps = block_split(3, 1, rng)
    out = pinch(rho, ps, on="B")
    assert np.linalg.norm(ptrace(out.matrix, (2, 3), [0]) - ptrace(rho.matrix, (2, 3), [0])) < 1e-12
    b_direct = pinch_array(ptrace(rho.matrix, (2, 3), [1]), ps)
    assert np.linalg.norm(ptrace(out.matrix, (2, 3), [1]) - b_direct) < 1e-12


def test_spectrum_of_is_sorted():
    s = spectrum_of(np.diag([0.1, 0.6, 0.3]))
    assert list(s.values) == [0.6, 0.3, 0.1]
    assert entropy_of(np.diag([0.5, 0.5])) == pytest.approx(1.0)
