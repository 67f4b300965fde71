"""Majorization, sorted-diagonal rearrangement and pinching."""

from __future__ import annotations

import numpy as np

from .qcore import DensityOperator, Spectrum, StateError, checked_eigvalsh

PARTIAL_SUM_TOL = 1e-10
PSD_TOL = 1e-10


def majorizes(x: Spectrum, y: Spectrum, tol: float = PARTIAL_SUM_TOL) -> bool:
    """Return whether x is majorized by y (x < y).

    Shorter vectors are zero padded.  Every partial sum of y must dominate
    the corresponding partial sum of x and the totals must agree, each up to
    ``tol``.
    """
    x = x if isinstance(x, Spectrum) else Spectrum(x)
    y = y if isinstance(y, Spectrum) else Spectrum(y)
    n = max(len(x), len(y))
    cx = np.cumsum(x.padded(n))
    cy = np.cumsum(y.padded(n))
    if abs(cx[-1] - cy[-1]) > tol:
        return False
    return bool(np.all(cx <= cy + tol))


def down_arrow(X: np.ndarray) -> np.ndarray:
    """Diagonal matrix of the eigenvalues of Hermitian X in non-increasing order."""
    X = np.asarray(X)
    if np.max(np.abs(X - X.conj().T), initial=0.0) > 1e-10:
        raise ValueError("operator is not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (X + X.conj().T))[::-1]
    return np.diag(w)


def _psd(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > PSD_TOL:
        raise StateError(f"{name} is not Hermitian")
    if m.size and np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -PSD_TOL:
        raise StateError(f"{name} is not positive semidefinite")
    return m


def tensor_rearrangement_check(B1, B2, C1, C2, tol: float = PARTIAL_SUM_TOL):
    """Compare the spectra of B1(x)C1 + B2(x)C2 and its sorted-diagonal rearrangement.

    Returns ``(lhs, rhs, ok)`` where ``lhs`` is the spectrum of the original
    sum, ``rhs`` that of B1v(x)C1v + B2v(x)C2v, and ``ok`` whether lhs < rhs.
    """
    B1, B2 = _psd(B1, "B1"), _psd(B2, "B2")
    C1, C2 = _psd(C1, "C1"), _psd(C2, "C2")
    if B1.shape != B2.shape or C1.shape != C2.shape:
        raise ValueError("B1/B2 and C1/C2 must have matching shapes")
    lhs_op = np.kron(B1, C1) + np.kron(B2, C2)
    rhs_op = np.kron(down_arrow(B1), down_arrow(C1)) + np.kron(down_arrow(B2), down_arrow(C2))
    lhs = Spectrum(np.clip(np.linalg.eigvalsh(lhs_op), 0.0, None))
    rhs = Spectrum(np.clip(np.real(np.diag(rhs_op)), 0.0, None))
    return lhs, rhs, majorizes(lhs, rhs, tol)


def _check_projectors(projectors, dim, tol=1e-10):
    ps = [np.asarray(p, dtype=complex) for p in projectors]
    if not ps:
        raise ValueError("need at least one projector")
    total = np.zeros((dim, dim), dtype=complex)
    for i, p in enumerate(ps):
        if p.shape != (dim, dim):
            raise ValueError(f"projector {i} has shape {p.shape}, expected {(dim, dim)}")
        if np.max(np.abs(p @ p - p)) > tol or np.max(np.abs(p - p.conj().T)) > tol:
            raise ValueError(f"operator {i} is not an orthogonal projector")
        for j in range(i):
            if np.max(np.abs(p @ ps[j])) > tol:
                raise ValueError(f"projectors {j} and {i} are not mutually orthogonal")
        total += p
    if np.max(np.abs(total - np.eye(dim))) > tol:
        raise ValueError("projectors do not sum to the identity")
    return ps


def pinch_array(matrix: np.ndarray, projectors) -> np.ndarray:
    return sum(p @ matrix @ p for p in projectors)


def pinch(rho: DensityOperator, projectors, on: str | None = None) -> DensityOperator:
    """sum_i P_i rho P_i, optionally with P_i acting on a single subsystem ``on``."""
    if on is None:
        dim = rho.dim
        ps = _check_projectors(projectors, dim)
    else:
        pos = rho.index(on)
        ps = _check_projectors(projectors, rho.dims[pos])
        left = int(np.prod(rho.dims[:pos]))
        right = int(np.prod(rho.dims[pos + 1 :]))
        ps = [np.kron(np.kron(np.eye(left), p), np.eye(right)) for p in ps]
    return DensityOperator(pinch_array(rho.matrix, ps), rho.dims, rho.labels)


def spectrum_of(matrix: np.ndarray) -> Spectrum:
    return Spectrum(checked_eigvalsh(matrix))
