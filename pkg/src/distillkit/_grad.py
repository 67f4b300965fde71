"""Batched entropy values and gradients for unnormalized pure-state branches.

For a complex matrix X, s(XX^dagger) = -Tr[XX^dagger log2 XX^dagger] has the
gradient G = 2 f'(XX^dagger) X with f'(l) = -log2(l) - 1/ln 2, in the sense
ds = Re Tr(G^dagger dX).  The smaller of XX^dagger and X^dagger X is
diagonalized.
"""

from __future__ import annotations

import numpy as np

_INV_LN2 = 1.0 / np.log(2.0)
_FLOOR = 1e-300


def _fprime(w: np.ndarray) -> np.ndarray:
    return -np.log2(np.maximum(w, _FLOOR)) - _INV_LN2


def _ent(w: np.ndarray) -> np.ndarray:
    w = np.maximum(w, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return -t.sum(axis=-1)


def gram_entropy(x: np.ndarray, grad: bool = True):
    """Batched s(X X^dagger) for x of shape (..., p, q) and optionally its gradient."""
    p, q = x.shape[-2:]
    xh = np.conj(np.swapaxes(x, -1, -2))
    if p <= q:
        g = x @ xh
    else:
        g = xh @ x
    g = 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))
    w, u = np.linalg.eigh(g)
    val = _ent(w)
    if not grad:
        return val, None
    fp = _fprime(w)
    f = (u * fp[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))
    gx = 2.0 * (f @ x) if p <= q else 2.0 * (x @ f)
    return val, gx


def branch_value_grad(chi: np.ndarray, grad: bool = True):
    """sum_m [s(rho_B^m) - s(rho_E^m)] for chi of shape (m, a, b, e).

    chi[m] is the unnormalized pure branch on A' (x) B (x) E.  Returns the
    total and, if requested, the gradient with respect to chi.
    """
    m, a, b, e = chi.shape
    xb = np.transpose(chi, (0, 2, 1, 3)).reshape(m, b, a * e)
    xe = np.transpose(chi, (0, 3, 1, 2)).reshape(m, e, a * b)
    vb, gb = gram_entropy(xb, grad)
    ve, ge = gram_entropy(xe, grad)
    val = float(vb.sum() - ve.sum())
    if not grad:
        return val, None
    gb = np.transpose(gb.reshape(m, b, a, e), (0, 2, 1, 3))
    ge = np.transpose(ge.reshape(m, e, a, b), (0, 2, 3, 1))
    return val, gb - ge


def normalized_value_grad(chi: np.ndarray, grad: bool = True):
    """I(A'>B) = [s(rho_B) - s(rho_E)] / t of a single unnormalized branch, t = ||chi||^2."""
    t = float(np.vdot(chi, chi).real)
    if t < 1e-12:
        return -np.inf, None
    v, g = branch_value_grad(chi[None], grad)
    f = v / t
    if not grad:
        return f, None
    return f, (g[0] - 2.0 * f * chi) / t
