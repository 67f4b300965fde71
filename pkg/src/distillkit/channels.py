"""Kraus maps, Choi operators, complementary channels and instruments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import (
    DensityOperator,
    StateError,
    entropy_of,
    ptrace,
    reduced_from_vector,
    spectral_decomposition,
)

COMPLETENESS_TOL = 1e-10
CHOI_RANK_TOL = 1e-12


def _freeze(ops) -> tuple[np.ndarray, ...]:
    out = []
    for k in ops:
        a = np.array(k, dtype=complex)
        if a.ndim != 2:
            raise ValueError("Kraus operators must be matrices")
        a.setflags(write=False)
        out.append(a)
    if not out:
        raise ValueError("at least one Kraus operator is required")
    shapes = {a.shape for a in out}
    if len(shapes) != 1:
        raise ValueError(f"Kraus operators have mixed shapes {shapes}")
    return tuple(out)


def _gram_sum(ops) -> np.ndarray:
    return sum(k.conj().T @ k for k in ops)


@dataclass(frozen=True)
class KrausMap:
    """CP map rho -> sum_k E_k rho E_k^dagger with E_k of shape (dim_out, dim_in)."""

    kraus_ops: tuple[np.ndarray, ...]
    trace_preserving: bool = None
    tol: float = field(default=COMPLETENESS_TOL, repr=False, compare=False)

    def __post_init__(self):
        ops = _freeze(self.kraus_ops)
        object.__setattr__(self, "kraus_ops", ops)
        dev = np.max(np.abs(_gram_sum(ops) - np.eye(ops[0].shape[1])))
        tp = bool(dev <= self.tol)
        if self.trace_preserving is None:
            object.__setattr__(self, "trace_preserving", tp)
        elif self.trace_preserving and not tp:
            raise ValueError(f"Kraus operators deviate from completeness by {dev:.3g}")

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]

    def __len__(self):
        return len(self.kraus_ops)

    def stacked(self) -> np.ndarray:
        """Kraus operators as an array of shape (r, dim_out, dim_in)."""
        return np.stack(self.kraus_ops)

    def stinespring(self) -> np.ndarray:
        """V = sum_k E_k (x) |k>_E, shape (dim_out * r, dim_in), output ordered B then E."""
        s = self.stacked()
        return np.transpose(s, (1, 0, 2)).reshape(self.dim_out * len(self), self.dim_in)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        s = self.stacked()
        return np.einsum("kij,jl,kml->im", s, rho, s.conj())


@dataclass(frozen=True)
class Instrument:
    """Outcome-labeled Kraus family K_m : A -> A'."""

    outcomes: tuple[tuple[object, np.ndarray], ...]
    complete: bool = None
    tol: float = field(default=COMPLETENESS_TOL, repr=False, compare=False)

    def __post_init__(self):
        items = list(self.outcomes)
        if items and not isinstance(items[0], tuple):
            items = list(enumerate(items))
        labels = [m for m, _ in items]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate outcome labels")
        ops = _freeze([k for _, k in items])
        object.__setattr__(self, "outcomes", tuple(zip(labels, ops)))
        dev = np.max(np.abs(_gram_sum(ops) - np.eye(ops[0].shape[1])))
        ok = bool(dev <= self.tol)
        if self.complete is None:
            object.__setattr__(self, "complete", ok)
        elif self.complete and not ok:
            raise ValueError(f"instrument deviates from completeness by {dev:.3g}")

    @property
    def kraus_ops(self) -> tuple[np.ndarray, ...]:
        return tuple(k for _, k in self.outcomes)

    @property
    def labels(self) -> tuple:
        return tuple(m for m, _ in self.outcomes)

    @property
    def dim_in(self) -> int:
        return self.outcomes[0][1].shape[1]

    @property
    def dim_out(self) -> int:
        return self.outcomes[0][1].shape[0]

    def __len__(self):
        return len(self.outcomes)

    def stacked(self) -> np.ndarray:
        return np.stack(self.kraus_ops)

    @classmethod
    def trivial(cls, dim: int) -> "Instrument":
        return cls([(0, np.eye(dim))], complete=True)

    @classmethod
    def from_isometry(cls, v: np.ndarray, outcomes: int) -> "Instrument":
        """Read K_m = (I (x) <m|) V off an isometry A -> A' (x) M."""
        d_in = v.shape[1]
        d_out = v.shape[0] // outcomes
        ks = np.transpose(v.reshape(d_out, outcomes, d_in), (1, 0, 2))
        return cls(list(enumerate(ks)), complete=True)


# ---------------------------------------------------------------------------


def apply_on(ops: np.ndarray, matrix: np.ndarray, dims: Sequence[int], pos: int) -> np.ndarray:
    """sum_k (I (x) E_k (x) I) M (...)^dagger with E_k acting on factor ``pos``.

    Returns the output array; the output factor ``pos`` has dimension ops.shape[1].
    """
    dims = list(dims)
    n = len(dims)
    t = matrix.reshape(dims + dims)
    # move the acted-on row and column indices to the front
    t = np.moveaxis(t, [pos, n + pos], [0, 1])
    # out[k, i, j] = sum_ab E_k[i,a] t[a,b] conj(E_k[j,b])
    t = np.einsum("kia,ab...,kjb->ij...", ops, t, ops.conj())
    t = np.moveaxis(t, [0, 1], [pos, n + pos])
    new_dims = dims.copy()
    new_dims[pos] = ops.shape[1]
    d = math.prod(new_dims)
    return t.reshape(d, d)


def apply_kraus(N: KrausMap, rho: DensityOperator, on: str, return_trace: bool = False):
    """Apply ``N`` to subsystem ``on``.

    For trace-preserving maps the output is a state.  For general CP maps
    the output is renormalized; pass ``return_trace=True`` to also get the
    trace before normalization (a zero-trace output raises).
    """
    pos = rho.index(on)
    if rho.dims[pos] != N.dim_in:
        raise ValueError(f"map input dim {N.dim_in} != dim {rho.dims[pos]} of {on!r}")
    out = apply_on(N.stacked(), rho.matrix, rho.dims, pos)
    dims = list(rho.dims)
    dims[pos] = N.dim_out
    tr = float(np.trace(out).real)
    if tr < 1e-14:
        raise StateError("map annihilates the input")
    res = DensityOperator(out / tr, dims, rho.labels)
    return (res, tr) if return_trace else res


def choi_operator(N: KrausMap) -> np.ndarray:
    """Unnormalized J = sum_k vec(E_k^T) vec(E_k^T)^dagger on input (x) output."""
    vecs = np.stack([k.T.reshape(-1) for k in N.kraus_ops])
    return vecs.T @ vecs.conj()


def choi_of_map(N: KrausMap, labels=("A", "B")) -> DensityOperator:
    j = choi_operator(N)
    tr = float(np.trace(j).real)
    if tr < 1e-14:
        raise ValueError("zero map has no normalized Choi state")
    return DensityOperator(j / tr, (N.dim_in, N.dim_out), labels)


def map_of_choi(rho: DensityOperator, rank_tol: float = CHOI_RANK_TOL) -> KrausMap:
    """Kraus map sigma -> d_A Tr_A[(sigma^T (x) I) rho] from a bipartite Choi state.

    The map is trace preserving exactly when Tr_B rho = I/d_A.
    """
    if len(rho.dims) != 2:
        raise ValueError("Choi state must be bipartite")
    da, db = rho.dims
    w, v = spectral_decomposition(rho.matrix * da)
    ops = [math.sqrt(mu) * v[:, k].reshape(da, db).T for k, mu in enumerate(w) if mu > rank_tol]
    return KrausMap(ops)


def complementary_kraus(ops: np.ndarray) -> np.ndarray:
    """G_j[k, :] = E_k[j, :] for E of shape (r, dout, din); result (dout, r, din)."""
    return np.transpose(ops, (1, 0, 2))


def complementary_channel(N: KrausMap) -> KrausMap:
    """Environment channel of the Stinespring dilation with dim E = number of Kraus operators."""
    if not N.trace_preserving:
        raise ValueError("complementary channel requires a trace-preserving map")
    return KrausMap(list(complementary_kraus(N.stacked())), trace_preserving=True)


def apply_instrument(T: Instrument, rho: DensityOperator, on: str, return_weights: bool = False):
    """sum_m K_m rho K_m^dagger (x) |m><m|_M with the register appended last."""
    pos = rho.index(on)
    if rho.dims[pos] != T.dim_in:
        raise ValueError(f"instrument input dim {T.dim_in} != dim {rho.dims[pos]} of {on!r}")
    branches = [apply_on(k[None], rho.matrix, rho.dims, pos) for k in T.kraus_ops]
    weights = np.array([np.trace(b).real for b in branches])
    total = weights.sum()
    if total < 1e-14:
        raise StateError("instrument annihilates the input")
    m = len(T)
    blocks = np.zeros((branches[0].shape[0] * m,) * 2, dtype=complex)
    for i, b in enumerate(branches):
        proj = np.zeros((m, m))
        proj[i, i] = 1.0
        blocks += np.kron(b, proj)
    dims = list(rho.dims)
    dims[pos] = T.dim_out
    label = "M"
    while label in rho.labels:
        label += "'"
    out = DensityOperator(blocks / total, dims + [m], rho.labels + (label,))
    return (out, weights / total) if return_weights else out


def instrument_isometry(T: Instrument) -> np.ndarray:
    """V = sum_m K_m (x) |m>_M (x) |m>_N, shape (dA' * |M| * |N|, dA)."""
    if not T.complete:
        raise ValueError("isometric extension requires a complete instrument")
    m = len(T)
    d_out, d_in = T.dim_out, T.dim_in
    v = np.zeros((d_out, m, m, d_in), dtype=complex)
    for i, k in enumerate(T.kraus_ops):
        v[:, i, i, :] = k
    return v.reshape(d_out * m * m, d_in)


def branch_vectors(ops: np.ndarray, psi: np.ndarray, da: int) -> np.ndarray:
    """(K_m (x) I) |psi> for |psi> on A (x) rest; shape (m, dA', rest)."""
    phi = psi.reshape(da, -1)
    return np.einsum("mij,jr->mir", ops, phi)


def branch_coherent_info(chi: np.ndarray, db: int) -> float:
    """sum_m [s(rho_B^m) - s(rho_{A'B}^m)] for branch vectors chi of shape (m, dA', dB * dE).

    Here s(X) = -Tr X log X for unnormalized X; the weights cancel because the
    branch probabilities sum to one.
    """
    total = 0.0
    for x in chi:
        da2 = x.shape[0]
        y = x.reshape(da2, db, -1)
        b = np.einsum("abr,acr->bc", y, y.conj())
        ab = y.reshape(da2 * db, -1)
        total += _s_unnorm(b) - _s_unnorm(_small_gram(ab))
    return total


def _small_gram(x: np.ndarray) -> np.ndarray:
    return x @ x.conj().T if x.shape[0] <= x.shape[1] else x.conj().T @ x


def _s_unnorm(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def instrument_coherent_info(T: Instrument, rho: DensityOperator) -> float:
    """I(A'>BM) of the post-instrument state; A is the first subsystem of ``rho``."""
    if not T.complete:
        raise ValueError("instrument_coherent_info requires a complete instrument")
    if len(rho.dims) < 2:
        raise ValueError("state must have an A part and a B part")
    da, db = rho.dims[0], int(np.prod(rho.dims[1:]))
    if T.dim_in != da:
        raise ValueError(f"instrument input dim {T.dim_in} != dim A = {da}")
    s_bm = 0.0
    s_abm = 0.0
    ops = T.stacked()
    for k in ops:
        br = apply_on(k[None], rho.matrix, (da, db), 0)
        p = float(np.trace(br).real)
        if p <= 1e-15:
            continue
        br = br / p
        h = -p * np.log2(p)
        s_abm += p * entropy_of(br) + h
        s_bm += p * entropy_of(ptrace(br, (T.dim_out, db), [1])) + h
    return s_bm - s_abm


def lemma_entropy_difference(T: Instrument, rho: DensityOperator) -> float:
    """S(BM) - S(EM) evaluated on (V (x) I)|phi>_ABE with V the isometric extension.

    Independent of :func:`instrument_coherent_info`: it builds the full pure
    state on A' M N B E and takes two marginals.
    """
    from .qcore import purify

    da, db = rho.dims[0], int(np.prod(rho.dims[1:]))
    phi = purify(rho)
    de = phi.dims[-1]
    v = instrument_isometry(T)
    m = len(T)
    d_out = T.dim_out
    psi = (v @ phi.amplitudes.reshape(da, db * de)).reshape(-1)
    dims = (d_out, m, m, db, de)  # A' M N B E
    s_bm = entropy_of(reduced_from_vector(psi, dims, [3, 1]))
    s_em = entropy_of(reduced_from_vector(psi, dims, [4, 1]))
    return s_bm - s_em


def random_instrument(d_in: int, d_out: int, outcomes: int, rng=None) -> Instrument:
    """Complete instrument read off a Haar-random isometry A -> A' (x) M."""
    from .qcore import random_isometry

    v = random_isometry(d_out * outcomes, d_in, rng)
    return Instrument.from_isometry(v, outcomes)
