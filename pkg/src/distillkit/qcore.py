"""Labeled multipartite density operators, partial traces and entropies.

All logarithms are base 2 and ``0 log 0 = 0``.  The public functions work
on :class:`DensityOperator` values; the underscore-free array helpers
(``ptrace``, ``permute_subsystems``, ``entropy_of``...) operate on plain
numpy arrays and are what the optimizers use in their inner loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
EIG_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-12
RANK_TOL = 1e-12
DEGENERACY_TOL = 1e-10


class StateError(ValueError):
    """Raised when an operator is not a valid quantum state."""


def _as_labels(labels, n):
    if labels is None:
        if n <= 26:
            return tuple(chr(ord("A") + i) for i in range(n))
        return tuple(f"S{i}" for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} subsystems")
    if len(set(labels)) != n:
        raise ValueError(f"duplicate labels in {labels}")
    return labels


@dataclass(frozen=True)
class DensityOperator:
    """PSD, unit-trace operator on an ordered list of labeled subsystems."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = None
    tol: float = field(default=HERMITIAN_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"dimensions must be positive, got {dims}")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StateError(f"matrix must be square, got shape {m.shape}")
        if math.prod(dims) != m.shape[0]:
            raise StateError(f"dims {dims} do not match side length {m.shape[0]}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > self.tol:
            raise StateError("matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        if abs(np.trace(m).real - 1.0) > self.tol:
            raise StateError(f"trace {np.trace(m).real!r} is not 1")
        if np.linalg.eigvalsh(m)[0] < -self.tol:
            raise StateError("matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", _as_labels(self.labels, len(dims)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}; have {self.labels}") from None

    def indices(self, labels: Iterable[str]) -> tuple[int, ...]:
        if isinstance(labels, str):
            labels = [labels]
        return tuple(self.index(x) for x in labels)

    def relabel(self, labels: Sequence[str]) -> "DensityOperator":
        return DensityOperator(self.matrix, self.dims, labels)

    def spectrum(self) -> "Spectrum":
        return Spectrum(np.linalg.eigvalsh(self.matrix))


@dataclass(frozen=True)
class PureStateVector:
    amplitudes: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = None

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        dims = tuple(int(d) for d in self.dims)
        if math.prod(dims) != v.size:
            raise StateError(f"dims {dims} do not match vector length {v.size}")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise StateError("state vector is not normalized")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", _as_labels(self.labels, len(dims)))

    def density(self) -> DensityOperator:
        v = self.amplitudes
        return DensityOperator(np.outer(v, v.conj()), self.dims, self.labels)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted non-increasingly."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.real(np.asarray(self.values, dtype=float)).reshape(-1))[::-1]
        if v.size and v[-1] < -EIG_TOL:
            raise StateError(f"spectrum entry {v[-1]!r} is negative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, self.values.size))
        out[: self.values.size] = self.values
        return out


# ---------------------------------------------------------------------------
# array-level helpers


def ptrace(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of ``matrix`` keeping subsystem indices ``keep`` (in the given order)."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    t = matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum subscripts: row index i -> letter i, column index -> letter n+i,
    # traced column letters are tied to their row letters
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    cols = [letters[i] if i in traced else letters[n + i] for i in range(n)]
    out = [letters[i] for i in keep] + [letters[n + i] for i in keep]
    spec = "".join(letters[:n]) + "".join(cols) + "->" + "".join(out)
    d = math.prod(dims[i] for i in keep)
    return np.einsum(spec, t).reshape(d, d)


def reduced_from_vector(psi: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of the pure state ``psi`` on subsystems ``keep``."""
    dims = list(dims)
    keep = list(keep)
    rest = [i for i in range(len(dims)) if i not in keep]
    t = np.transpose(psi.reshape(dims), keep + rest)
    dk = math.prod(dims[i] for i in keep)
    m = t.reshape(dk, -1)
    return m @ m.conj().T


def permute_subsystems(matrix: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``k`` is old factor ``perm[k]``."""
    dims = list(dims)
    n = len(dims)
    perm = list(perm)
    t = matrix.reshape(dims + dims)
    t = np.transpose(t, perm + [n + p for p in perm])
    d = matrix.shape[0]
    return t.reshape(d, d)


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def checked_eigvalsh(matrix: np.ndarray, tol: float = EIG_TOL) -> np.ndarray:
    """Eigenvalues with values in [-tol, 0) clipped to zero; below -tol is an error."""
    w = np.linalg.eigvalsh(matrix)
    if w.size and w[0] < -tol:
        raise StateError(f"eigenvalue {w[0]!r} below -{tol}")
    return np.clip(w, 0.0, None)


def shannon_bits(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def entropy_of(matrix: np.ndarray, tol: float = EIG_TOL) -> float:
    """Von Neumann entropy (bits) of a PSD array; does not require unit trace."""
    w = checked_eigvalsh(matrix, tol)
    w = np.clip(w, 0.0, 1.0) if abs(w.sum() - 1.0) < 1e-6 else w
    return shannon_bits(w)


def spectral_decomposition(matrix: np.ndarray, degeneracy_tol: float = DEGENERACY_TOL):
    """Eigenpairs in non-increasing eigenvalue order under a deterministic convention.

    Within a degenerate eigenspace the basis is rebuilt by projecting the
    computational basis vectors e_0, e_1, ... and orthonormalizing, so the
    returned vectors do not depend on the LAPACK driver.  Every vector is
    rescaled so its first nonzero component is real and positive.
    """
    h = 0.5 * (matrix + matrix.conj().T)
    w, v = np.linalg.eigh(h)
    w = w[::-1]
    v = v[:, ::-1]
    n = w.size
    out = np.empty_like(v)
    i = 0
    while i < n:
        j = i + 1
        while j < n and abs(w[i] - w[j]) <= degeneracy_tol * max(1.0, abs(w[i])):
            j += 1
        block = v[:, i:j]
        if j - i > 1:
            block = _canonical_basis(block)
        out[:, i:j] = block
        i = j
    for k in range(n):
        out[:, k] = _fix_phase(out[:, k])
    return w, out


def _canonical_basis(block: np.ndarray) -> np.ndarray:
    proj = block @ block.conj().T
    dim, m = block.shape
    chosen: list[np.ndarray] = []
    for e in range(dim):
        u = proj[:, e].copy()
        for c in chosen:
            u -= c * (c.conj() @ u)
        nrm = np.linalg.norm(u)
        if nrm > 1e-8:
            chosen.append(u / nrm)
        if len(chosen) == m:
            break
    return np.stack(chosen, axis=1)


def _fix_phase(vec: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    nz = np.flatnonzero(np.abs(vec) > tol)
    if nz.size == 0:
        return vec
    c = vec[nz[0]]
    return vec * (abs(c) / c)


def random_density_matrix(dim: int, rank: int | None = None, rng=None) -> np.ndarray:
    """Ginibre-distributed random density matrix."""
    rng = np.random.default_rng(rng)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(dim: int, rng=None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_isometry(d_out: int, d_in: int, rng=None) -> np.ndarray:
    """Haar-random isometry (orthonormal columns), shape ``(d_out, d_in)``."""
    if d_out < d_in:
        raise ValueError("isometry needs d_out >= d_in")
    rng = np.random.default_rng(rng)
    z = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary(dim: int, rng=None) -> np.ndarray:
    return random_isometry(dim, dim, rng)


# ---------------------------------------------------------------------------
# DensityOperator-level operations


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    labels = a.labels + b.labels
    if len(set(labels)) != len(labels):
        b_labels = tuple(f"{x}'" if x in a.labels else x for x in b.labels)
        labels = a.labels + b_labels
    return DensityOperator(np.kron(a.matrix, b.matrix), a.dims + b.dims, labels)


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Marginal on the subsystems named in ``keep`` (kept in ``rho``'s order)."""
    idx = rho.indices(keep)
    if not idx:
        raise ValueError("keep must name at least one subsystem")
    idx = tuple(sorted(set(idx)))
    m = ptrace(rho.matrix, rho.dims, idx)
    return DensityOperator(m, tuple(rho.dims[i] for i in idx), tuple(rho.labels[i] for i in idx))


def purify(rho: DensityOperator, env_label: str = "E") -> PureStateVector:
    """Canonical purification sum_i sqrt(l_i) |v_i> (x) |i>_E, E of dimension rank(rho)."""
    w, v = spectral_decomposition(rho.matrix)
    r = int(np.sum(w > RANK_TOL))
    r = max(r, 1)
    w = np.clip(w[:r], 0.0, None)
    psi = (v[:, :r] * np.sqrt(w)).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    label = env_label
    while label in rho.labels:
        label += "'"
    return PureStateVector(psi, rho.dims + (r,), rho.labels + (label,))


def von_neumann_entropy(rho: DensityOperator, tol: float = EIG_TOL) -> float:
    w = np.clip(checked_eigvalsh(rho.matrix, tol), 0.0, 1.0)
    return shannon_bits(w)


def renyi2_entropy(rho: DensityOperator) -> float:
    purity = float(np.sum(np.abs(rho.matrix) ** 2))
    return float(-np.log2(purity))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def _check_partition(rho: DensityOperator, a, b):
    a = (a,) if isinstance(a, str) else tuple(a)
    b = (b,) if isinstance(b, str) else tuple(b)
    ia, ib = rho.indices(a), rho.indices(b)
    if not ia or not ib or set(ia) & set(ib) or set(ia) | set(ib) != set(range(len(rho.dims))):
        raise ValueError(f"{a} and {b} do not partition {rho.labels}")
    return ia, ib


def coherent_information(rho: DensityOperator, a, b) -> float:
    """I(A>B) = S(B) - S(AB)."""
    _, ib = _check_partition(rho, a, b)
    s_b = entropy_of(ptrace(rho.matrix, rho.dims, sorted(ib)))
    return s_b - entropy_of(rho.matrix)


def mutual_information(rho: DensityOperator, a, b) -> float:
    ia, ib = _check_partition(rho, a, b)
    s_a = entropy_of(ptrace(rho.matrix, rho.dims, sorted(ia)))
    s_b = entropy_of(ptrace(rho.matrix, rho.dims, sorted(ib)))
    return s_a + s_b - entropy_of(rho.matrix)
