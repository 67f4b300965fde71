"""Entropy minimization over mixtures of partially erasing channel outputs.

Bit-strings x = (x_1, ..., x_n) are tuples of 0/1.  Site i feeds its free
input into A_{x_i} (A_0 = C^d0, A_1 = C^d1) and the channel N_{x_i}
supplies the fixed state of the other slot, so every branch lives on
(C^d0 (x) C^d1)^{(x)n}.  Weights ``p`` are indexed by the integer whose
binary digits are x_1 ... x_n (x_1 most significant).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._parallel import rng_for
from .families import erasing_output, partially_erasing
from .qcore import DensityOperator, entropy_of, kron_all, permute_subsystems, spectral_decomposition

CANDIDATE_THRESHOLD = -1e-6
DEFAULT_BUDGET_DIM = 256


class BudgetError(ValueError):
    """Raised when the output dimension of a search exceeds the budget."""


def bitstrings(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=n))


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOperator) else np.asarray(x, dtype=complex)


def _site_dims(bits, d0: int, d1: int) -> list[int]:
    return [d0 if b == 0 else d1 for b in bits]


@dataclass(frozen=True)
class AlignmentInstance:
    n: int
    p: np.ndarray
    sigma0: DensityOperator
    sigma1: DensityOperator
    inputs: Mapping[tuple[int, ...], DensityOperator]

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.size != 2**self.n:
            raise ValueError(f"need {2**self.n} weights, got {p.size}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        object.__setattr__(self, "p", p)
        d0, d1 = self.sigma0.dim, self.sigma1.dim
        for bits in bitstrings(self.n):
            if p[_index(bits)] == 0 and bits not in self.inputs:
                continue
            rho = self.inputs[bits]
            want = math.prod(_site_dims(bits, d0, d1))
            if rho.dim != want:
                raise ValueError(f"input for {bits} has dim {rho.dim}, expected {want}")


def _index(bits) -> int:
    return int("".join(str(b) for b in bits), 2) if bits else 0


def mixture_output(inst: AlignmentInstance) -> np.ndarray:
    """sum_x p_x N_x(rho_x) as a dense matrix."""
    s0, s1 = inst.sigma0.matrix, inst.sigma1.matrix
    out = None
    for bits in bitstrings(inst.n):
        w = inst.p[_index(bits)]
        if w == 0:
            continue
        term = w * erasing_output(inst.inputs[bits].matrix, bits, s0, s1)
        out = term if out is None else out + term
    return out


def alignment_objective(inst: AlignmentInstance) -> float:
    """Von Neumann entropy (bits) of the weighted channel-output mixture."""
    return entropy_of(mixture_output(inst))


def top_eigenvector(sigma: DensityOperator) -> np.ndarray:
    """Maximal eigenvector under the deterministic degenerate-subspace convention."""
    _, v = spectral_decomposition(_matrix(sigma))
    return v[:, 0]


def aligned_inputs(sigma0: DensityOperator, sigma1: DensityOperator, n: int) -> dict:
    """x -> tensor product of the maximal-eigenvector projectors tau_{x_i}."""
    taus = []
    for s in (sigma0, sigma1):
        v = top_eigenvector(s)
        taus.append(np.outer(v, v.conj()))
    d0, d1 = sigma0.dim, sigma1.dim
    out = {}
    for bits in bitstrings(n):
        m = kron_all(taus[b] for b in bits)
        out[bits] = DensityOperator(m, _site_dims(bits, d0, d1))
    return out


def aligned_instance(sigma0, sigma1, n: int, p) -> AlignmentInstance:
    return AlignmentInstance(n, p, sigma0, sigma1, aligned_inputs(sigma0, sigma1, n))


def aligned_value(sigma0, sigma1, n: int, p) -> float:
    return alignment_objective(aligned_instance(sigma0, sigma1, n, p))


# ---------------------------------------------------------------------------
# randomized search


@dataclass(frozen=True)
class SearchReport:
    n: int
    aligned_value: float
    best_value: float
    worst_gap: float
    worst_trial: int
    argmin: dict
    trials: int
    seed: int
    iterations: int

    @property
    def candidate(self) -> bool:
        return self.worst_gap < CANDIDATE_THRESHOLD


def _batched_entropy(m: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(m)
    w = np.clip(w, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
    return -t.sum(axis=-1)


class _BatchedMixture:
    """Evaluates S(sum_x p_x N_x(|v_x><v_x|)) for a batch of pure-input families.

    Each branch is kept as a factor F_x with p_x N_x(|v><v|) = F_x F_x^dagger,
    so the mixture entropy is that of the smaller Gram matrix of [F_x ...].
    """

    def __init__(self, sigma0, sigma1, n, p):
        self.s0, self.s1 = _matrix(sigma0), _matrix(sigma1)
        d0, d1 = self.s0.shape[0], self.s1.shape[0]
        self.dout = (d0 * d1) ** n
        self.blocks = []
        for bits in bitstrings(n):
            w = float(p[_index(bits)])
            if w == 0:
                continue
            fixed = kron_all(self.s1 if b == 0 else self.s0 for b in bits)
            mu, u = np.linalg.eigh(fixed)
            keep = mu > 1e-15
            root = u[:, keep] * np.sqrt(w * mu[keep])
            dims = _site_dims(bits, d0, d1) + [d1 if b == 0 else d0 for b in bits]
            perm = []
            for i, b in enumerate(bits):
                perm += [i, n + i] if b == 0 else [n + i, i]
            self.blocks.append((bits, root, dims, perm, math.prod(dims[:n])))

    def terms(self, k: int, v: np.ndarray) -> np.ndarray:
        _, root, dims, perm, _ = self.blocks[k]
        t = np.einsum("ti,kr->tikr", v, root)
        t = t.reshape((v.shape[0],) + tuple(dims) + (root.shape[1],))
        axes = [0] + [1 + q for q in perm] + [1 + len(dims)]
        return np.transpose(t, axes).reshape(v.shape[0], self.dout, root.shape[1])

    def value(self, parts: list[np.ndarray]) -> np.ndarray:
        return _factor_entropy(np.concatenate(parts, axis=2))


def _factor_entropy(f: np.ndarray) -> np.ndarray:
    fh = np.conj(np.swapaxes(f, -1, -2))
    g = fh @ f if f.shape[2] < f.shape[1] else f @ fh
    return _batched_entropy(g)


def _swap(parts: list, k: int, part) -> list:
    return parts[:k] + [part] + parts[k + 1 :]


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _haar(rng, shape) -> np.ndarray:
    return _normalize(rng.normal(size=shape) + 1j * rng.normal(size=shape))


def _search(sigma0, sigma1, n, p, trials, seed, iterations=200, fd_step=1e-5, step0=0.5):
    """Batched random-start, random-direction descent over pure inputs."""
    ev = _BatchedMixture(sigma0, sigma1, n, p)
    nb = len(ev.blocks)
    sizes = [b[4] for b in ev.blocks]
    # per-trial generators; all randomness drawn up front so results do not
    # depend on how trials are batched
    starts = [np.empty((trials, d), dtype=complex) for d in sizes]
    dirs = [np.empty((trials, iterations, d), dtype=complex) for d in sizes]
    for t in range(trials):
        rng = rng_for(seed, t)
        for k, d in enumerate(sizes):
            starts[k][t] = _haar(rng, d)
        for k, d in enumerate(sizes):
            dirs[k][t] = rng.normal(size=(iterations, d)) + 1j * rng.normal(size=(iterations, d))
    vs = starts
    parts = [ev.terms(k, vs[k]) for k in range(nb)]
    val = ev.value(parts)
    steps = np.full((trials, nb), step0)
    for it in range(iterations):
        for k in range(nb):
            v = vs[k]
            d = dirs[k][:, it, :]
            d = d - v * np.sum(v.conj() * d, axis=1, keepdims=True)
            d = _normalize(d)
            fp = ev.value(_swap(parts, k, ev.terms(k, _normalize(v + fd_step * d))))
            fm = ev.value(_swap(parts, k, ev.terms(k, _normalize(v - fd_step * d))))
            g = (fp - fm) / (2 * fd_step)
            cand = _normalize(v - (steps[:, k] * g)[:, None] * d)
            cpart = ev.terms(k, cand)
            cval = ev.value(_swap(parts, k, cpart))
            better = cval < val
            vs[k] = np.where(better[:, None], cand, v)
            parts[k] = np.where(better[:, None, None], cpart, parts[k])
            val = np.where(better, cval, val)
            steps[:, k] = np.where(better, steps[:, k], steps[:, k] * 0.7)
    return ev, vs, val


def _check_budget(sigma0, sigma1, n, budget_dim):
    d = (_matrix(sigma0).shape[0] * _matrix(sigma1).shape[0]) ** n
    if d > budget_dim:
        raise BudgetError(f"output dimension {d} exceeds budget {budget_dim}")


def conjecture_search(
    sigma0,
    sigma1,
    n: int,
    p,
    trials: int = 500,
    seed: int = 0,
    iterations: int = 200,
    budget_dim: int = DEFAULT_BUDGET_DIM,
) -> SearchReport:
    """Look for inputs (entangled across sites allowed) beating the aligned value.

    Gap = found minimum - aligned value.  A gap below -1e-6 is reported as a
    candidate counterexample; it is not asserted to be one.
    """
    _check_budget(sigma0, sigma1, n, budget_dim)
    p = np.asarray(p, dtype=float).reshape(-1)
    s0 = sigma0 if isinstance(sigma0, DensityOperator) else DensityOperator(sigma0, [len(sigma0)])
    s1 = sigma1 if isinstance(sigma1, DensityOperator) else DensityOperator(sigma1, [len(sigma1)])
    ref = aligned_value(s0, s1, n, p)
    ev, vs, val = _search(s0, s1, n, p, trials, seed, iterations)
    gaps = val - ref
    k = int(np.argmin(gaps))  # first occurrence on ties
    argmin = {blk[0]: vs[j][k] for j, blk in enumerate(ev.blocks)}
    return SearchReport(
        n=n,
        aligned_value=float(ref),
        best_value=float(val[k]),
        worst_gap=float(gaps[k]),
        worst_trial=k,
        argmin=argmin,
        trials=trials,
        seed=seed,
        iterations=iterations,
    )


def n1_alignment_check(sigma0, sigma1, p0: float, trials: int = 1000, seed: int = 0, iterations: int = 200) -> SearchReport:
    """Single-copy search: min over pure psi, phi of S(p0 psi (x) sigma1 + p1 sigma0 (x) phi)."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0={p0!r} outside [0, 1]")
    return conjecture_search(sigma0, sigma1, 1, [p0, 1.0 - p0], trials, seed, iterations)


# ---------------------------------------------------------------------------
# Renyi-2 machinery


@dataclass(frozen=True)
class Renyi2Value:
    entropy: float
    purity: float
    cross_purity: float


def renyi2_objective(inst: AlignmentInstance) -> Renyi2Value:
    """S_2 of the mixture, with Tr(rho^2) computed directly and via the cross-term expansion."""
    s0, s1 = inst.sigma0.matrix, inst.sigma1.matrix
    outs, ws = [], []
    for bits in bitstrings(inst.n):
        w = inst.p[_index(bits)]
        if w == 0:
            continue
        outs.append(erasing_output(inst.inputs[bits].matrix, bits, s0, s1))
        ws.append(w)
    ws = np.array(ws)
    omega = sum(w * o for w, o in zip(ws, outs))
    purity = float(np.sum(np.abs(omega) ** 2))
    flat = np.stack([o.reshape(-1) for o in outs])
    overlaps = np.real(flat.conj() @ flat.T)  # Tr[N_x(rho_x) N_y(rho_y)] for Hermitian outputs
    cross = float(ws @ overlaps @ ws)
    return Renyi2Value(float(-np.log2(purity)), purity, cross)


def overlap_counts(x: Sequence[int], y: Sequence[int]) -> dict:
    if len(x) != len(y):
        raise ValueError("bit-strings must have equal length")
    c = {(a, b): 0 for a in (0, 1) for b in (0, 1)}
    for a, b in zip(x, y):
        c[(int(a), int(b))] += 1
    return c


def renyi2_constants(sigma0, sigma1) -> tuple[float, float, float, float]:
    """(lambda_0, lambda_1, alpha_0, alpha_1): largest eigenvalues and purities."""
    s0, s1 = _matrix(sigma0), _matrix(sigma1)
    l0 = float(np.linalg.eigvalsh(s0)[-1])
    l1 = float(np.linalg.eigvalsh(s1)[-1])
    a0 = float(np.sum(np.abs(s0) ** 2))
    a1 = float(np.sum(np.abs(s1) ** 2))
    return l0, l1, a0, a1


def renyi2_overlap_bound(x, y, sigma0, sigma1) -> float:
    """alpha_1^N00 alpha_0^N11 (lambda_0 lambda_1)^(N01+N10) bounding Tr[N_x(rho_x) N_y(rho_y)]."""
    c = overlap_counts(x, y)
    l0, l1, a0, a1 = renyi2_constants(sigma0, sigma1)
    return a1 ** c[(0, 0)] * a0 ** c[(1, 1)] * (l0 * l1) ** (c[(0, 1)] + c[(1, 0)])


def adjoint_composition(a: int, b: int, sigma0, sigma1, X: np.ndarray) -> np.ndarray:
    """N_a^dagger N_b (X) from the closed single-site identities."""
    s0, s1 = _matrix(sigma0), _matrix(sigma1)
    X = np.asarray(X, dtype=complex)
    if (a, b) == (0, 0):
        return np.sum(np.abs(s1) ** 2) * X
    if (a, b) == (1, 1):
        return np.sum(np.abs(s0) ** 2) * X
    if (a, b) == (0, 1):
        return np.trace(s1 @ X) * s0
    if (a, b) == (1, 0):
        return np.trace(s0 @ X) * s1
    raise ValueError("a and b must be bits")


def adjoint_composition_kraus(a: int, b: int, sigma0, sigma1, X: np.ndarray) -> np.ndarray:
    """Same quantity evaluated through explicit Kraus operators and their adjoints."""
    s0 = sigma0 if isinstance(sigma0, DensityOperator) else DensityOperator(sigma0, [len(sigma0)])
    s1 = sigma1 if isinstance(sigma1, DensityOperator) else DensityOperator(sigma1, [len(sigma1)])
    na = partially_erasing(s0, s1, a).stacked()
    nb = partially_erasing(s0, s1, b).stacked()
    y = np.einsum("kij,jl,kml->im", nb, np.asarray(X, dtype=complex), nb.conj())
    return np.einsum("kji,jl,klm->im", na.conj(), y, na)
