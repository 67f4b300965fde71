"""Optimizers and closed forms for one-shot one-way distillation.

The instrument optimizer searches over isometries V : A -> A' (x) M, so
every candidate instrument K_m = (I (x) <m|) V is complete by
construction.  Objectives are evaluated on the purification |phi>_ABE:
each outcome contributes the unnormalized difference s(rho_B^m) - s(rho_E^m),
which sums to I(A'>BM) because the Shannon terms of the outcome
distribution cancel.  Ascent is Riemannian gradient ascent on the complex
Stiefel manifold with an SVD (polar) retraction and Armijo backtracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import least_squares, minimize

from ._grad import branch_value_grad, normalized_value_grad
from ._parallel import best_index, rng_for, run_indexed
from .channels import (
    Instrument,
    KrausMap,
    instrument_coherent_info,
)
from .families import gds_instrument, gds_sigma0, gds_state
from .qcore import (
    DensityOperator,
    binary_entropy,
    coherent_information,
    entropy_of,
    permute_subsystems,
    ptrace,
    purify,
    random_isometry,
    reduced_from_vector,
    spectral_decomposition,
)

DEFAULT_RESTARTS = 32
DEFAULT_BUDGET_DIM = 256
DEGRADABLE_THRESHOLD = 1e-6
FALSIFY_THRESHOLD = -1e-6


class BudgetError(ValueError):
    """Raised when a requested computation exceeds the dimension budget."""


@dataclass(frozen=True)
class OptimizationReport:
    value: float
    argument: Any
    restarts: int
    iterations: tuple[int, ...]
    seed: int
    converged: bool
    history: tuple[float, ...]
    trivial_value: float | None = None
    candidates: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DegradabilityReport:
    residual: float
    degrading_map: KrausMap
    direction: str
    converged: bool
    history: tuple[float, ...] = ()

    @property
    def numerically_degradable(self) -> bool:
        return self.residual < DEGRADABLE_THRESHOLD


@dataclass(frozen=True)
class FalsifierReport:
    worst_gap: float
    worst_index: int
    samples: int
    seed: int
    mean_gap: float
    argument: Any = None

    @property
    def violated(self) -> bool:
        return self.worst_gap < FALSIFY_THRESHOLD


def _bipartite(rho: DensityOperator) -> tuple[int, int]:
    """Alice holds the first subsystem, Bob all the others."""
    if len(rho.dims) < 2:
        raise ValueError("state must have at least two subsystems")
    return rho.dims[0], int(np.prod(rho.dims[1:]))


def _purification_matrix(rho: DensityOperator) -> tuple[np.ndarray, int, int, int]:
    da, db = _bipartite(rho)
    flat = DensityOperator(rho.matrix, (da, db), ("A", "B"))
    pur = purify(flat)
    de = pur.dims[2]
    return pur.amplitudes.reshape(da, db * de), da, db, de


def _polar(z: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(z, full_matrices=False)
    return u @ vh


def _herm(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().T)


def stiefel_ascent(f, v0: np.ndarray, max_iter: int = 500, gtol: float = 1e-10):
    """Maximize f over isometries V (V^dagger V = I).

    ``f(v, grad)`` returns ``(value, euclidean_gradient or None)``.
    Returns ``(value, v, iterations, converged)``.
    """
    v = _polar(v0)
    val, g = f(v, True)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        xi = g - v @ _herm(v.conj().T @ g)
        nrm = float(np.vdot(xi, xi).real)
        if nrm < gtol:
            converged = True
            break
        while True:
            vn = _polar(v + step * xi)
            vv, _ = f(vn, False)
            if vv >= val + 1e-4 * step * nrm:
                break
            step *= 0.5
            if step < 1e-12:
                break
        if step < 1e-12:
            converged = True
            break
        v = vn
        val, g = f(v, True)
        step = min(step * 2.0, 1e3)
    return val, v, it, converged


# ---------------------------------------------------------------------------
# instrument optimization


def _instrument_objective(phi: np.ndarray, a2: int, m: int, db: int, de: int):
    def f(v, grad):
        chi = (v @ phi).reshape(a2, m, db, de).transpose(1, 0, 2, 3)
        val, g = branch_value_grad(chi, grad)
        if not grad:
            return val, None
        gc = g.transpose(1, 0, 2, 3).reshape(a2 * m, db * de)
        return val, gc @ phi.conj().T

    return f


def _embed_instrument(kraus: list[np.ndarray], a2: int, m: int) -> np.ndarray:
    """Isometry A -> A' (x) M from at most m Kraus operators of shape (<= a2, dA)."""
    da = kraus[0].shape[1]
    v = np.zeros((a2, m, da), dtype=complex)
    for i, k in enumerate(kraus):
        v[: k.shape[0], i, :] = k
    return v.reshape(a2 * m, da)


def d1_lower_bound(
    rho: DensityOperator,
    outcomes: int | None = None,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    out_dim: int | None = None,
    max_iter: int = 500,
) -> OptimizationReport:
    """Best I(A'>BM) over complete instruments with ``outcomes`` Kraus operators.

    Any complete instrument is feasible, so the value is a lower bound on
    the one-shot one-way distillable entanglement.  Besides the random
    restarts, the trivial instrument and (when outcomes >= d_A) the
    measure-and-discard instrument, whose value is exactly 0, are always
    evaluated.
    """
    phi, da, db, de = _purification_matrix(rho)
    m = da * da if outcomes is None else int(outcomes)
    if m < 1:
        raise ValueError("outcomes must be >= 1")
    a2 = da if out_dim is None else int(out_dim)
    if a2 * m < da:
        raise ValueError("A' (x) M must be at least as large as A")
    f = _instrument_objective(phi, a2, m, db, de)

    fixed = []
    if a2 >= da:
        fixed.append(("trivial", _embed_instrument([np.eye(da)], a2, m)))
    if m >= da:
        discard = [np.outer(np.eye(a2)[0], np.eye(da)[k]) for k in range(da)]
        fixed.append(("measure_and_discard", _embed_instrument(discard, a2, m)))
    fixed_vals = [f(v, False)[0] for _, v in fixed]

    def run(r):
        v0 = random_isometry(a2 * m, da, rng_for(seed, r))
        return stiefel_ascent(f, v0, max_iter=max_iter)

    runs = run_indexed(run, restarts)
    values = fixed_vals + [r[0] for r in runs]
    isos = [v for _, v in fixed] + [r[1] for r in runs]
    k = best_index(values)
    flat = DensityOperator(rho.matrix, (da, db), ("A", "B"))
    return OptimizationReport(
        value=float(values[k]),
        argument=Instrument.from_isometry(isos[k], m),
        restarts=restarts,
        iterations=tuple(r[2] for r in runs),
        seed=seed,
        converged=all(r[3] for r in runs),
        history=tuple(float(r[0]) for r in runs),
        trivial_value=coherent_information(flat, "A", "B"),
        candidates={name: float(v) for (name, _), v in zip(fixed, fixed_vals)},
    )


# ---------------------------------------------------------------------------
# single-branch optimizers (filters and channel inputs)


def _lbfgs_max(f, z0: np.ndarray, max_iter: int):
    """Maximize a real function of a complex array with L-BFGS on (Re, Im)."""
    shape = z0.shape

    def unpack(x):
        return (x[: x.size // 2] + 1j * x[x.size // 2 :]).reshape(shape)

    def obj(x):
        val, g = f(unpack(x), True)
        if not np.isfinite(val):
            return 1e3, np.zeros_like(x)
        g = g.reshape(-1)
        return -val, -np.concatenate([g.real, g.imag])

    x0 = np.concatenate([z0.real.reshape(-1), z0.imag.reshape(-1)])
    res = minimize(obj, x0, jac=True, method="L-BFGS-B", options={"maxiter": max_iter, "gtol": 1e-10, "ftol": 1e-15})
    z = unpack(res.x)
    return f(z, False)[0], z, int(res.nit), bool(res.success)


def _top_vector(m: np.ndarray) -> np.ndarray:
    _, v = spectral_decomposition(m)
    return v[:, 0]


def d1_hat(
    rho: DensityOperator,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    out_dim: int | None = None,
    max_iter: int = 500,
) -> OptimizationReport:
    """Best I(A'>B) of (K (x) I) rho (K (x) I)^dagger / Tr(...) over single filters K.

    The returned filter is rescaled so that its largest singular value is 1.
    Filters that annihilate the state are rejected.
    """
    phi, da, db, de = _purification_matrix(rho)
    a2 = da if out_dim is None else int(out_dim)

    def f(k, grad):
        chi = (k @ phi).reshape(a2, db, de)
        val, g = normalized_value_grad(chi, grad)
        if g is None:
            return val, None
        return val, g.reshape(a2, db * de) @ phi.conj().T

    rho_a = ptrace(rho.matrix.reshape(da * db, da * db), (da, db), [0])
    fixed = [("rank_one", np.outer(np.eye(a2)[0], _top_vector(rho_a).conj()))]
    if a2 >= da:
        fixed.insert(0, ("identity", np.eye(a2, da, dtype=complex)))
    fixed_vals = [f(k, False)[0] for _, k in fixed]

    def run(r):
        rng = rng_for(seed, r)
        k0 = rng.normal(size=(a2, da)) + 1j * rng.normal(size=(a2, da))
        return _lbfgs_max(f, k0, max_iter)

    runs = run_indexed(run, restarts)
    values = fixed_vals + [r[0] for r in runs]
    args = [k for _, k in fixed] + [r[1] for r in runs]
    i = best_index(values)
    k = args[i] / np.linalg.norm(args[i], 2)
    return OptimizationReport(
        value=float(values[i]),
        argument=k,
        restarts=restarts,
        iterations=tuple(r[2] for r in runs),
        seed=seed,
        converged=all(r[3] for r in runs),
        history=tuple(float(r[0]) for r in runs),
        trivial_value=fixed_vals[0] if a2 >= da else None,
        candidates={name: float(v) for (name, _), v in zip(fixed, fixed_vals)},
    )


def q1_channel(
    N: KrausMap,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    ref_dim: int | None = None,
    max_iter: int = 500,
) -> OptimizationReport:
    """Best coherent information I(A'>B) of (id (x) N)(psi) / Tr(...) over pure inputs psi_{A'A}.

    Works for trace-preserving and general CP maps.  The argument is the
    normalized input vector on A' (x) A.
    """
    da, db = N.dim_in, N.dim_out
    r = len(N)
    a2 = da if ref_dim is None else int(ref_dim)
    ops = N.stacked()  # (r, db, da)

    def f(psi, grad):
        chi = np.einsum("kba,xa->xbk", ops, psi)  # (a2, db, r)
        val, g = normalized_value_grad(chi, grad)
        if g is None:
            return val, None
        return val, np.einsum("kba,xbk->xa", ops.conj(), g)

    gram = np.einsum("kba,kbc->ac", ops.conj(), ops)
    top = _top_vector(gram)
    fixed = [("product", np.outer(np.eye(a2)[0], top))]
    if a2 >= da:
        fixed.insert(0, ("maximally_entangled", np.eye(a2, da, dtype=complex) / math.sqrt(da)))
    fixed_vals = [f(p, False)[0] for _, p in fixed]

    def run(i):
        rng = rng_for(seed, i)
        p0 = rng.normal(size=(a2, da)) + 1j * rng.normal(size=(a2, da))
        return _lbfgs_max(f, p0, max_iter)

    runs = run_indexed(run, restarts)
    values = fixed_vals + [x[0] for x in runs]
    args = [p for _, p in fixed] + [x[1] for x in runs]
    i = best_index(values)
    psi = args[i].reshape(-1)
    return OptimizationReport(
        value=float(values[i]),
        argument=psi / np.linalg.norm(psi),
        restarts=restarts,
        iterations=tuple(x[2] for x in runs),
        seed=seed,
        converged=all(x[3] for x in runs),
        history=tuple(float(x[0]) for x in runs),
        trivial_value=fixed_vals[0] if a2 >= da else None,
        candidates={name: float(v) for (name, _), v in zip(fixed, fixed_vals)},
    )


def coherent_info_of_input(N: KrausMap, psi: np.ndarray) -> float:
    """I(A'>B) of (id (x) N)(|psi><psi|) normalized, psi on A' (x) A."""
    ops = N.stacked()
    p = np.asarray(psi).reshape(-1, N.dim_in)
    chi = np.einsum("kba,xa->xbk", ops, p)
    return normalized_value_grad(chi, False)[0]


def filter_coherent_info(rho: DensityOperator, k: np.ndarray) -> float:
    """I(A'>B) of the filtered and renormalized state (K (x) I) rho (K (x) I)^dagger."""
    da, db = _bipartite(rho)
    big = np.kron(k, np.eye(db))
    out = big @ rho.matrix @ big.conj().T
    t = float(np.trace(out).real)
    if t < 1e-12:
        raise ValueError("filter annihilates the state")
    return coherent_information(DensityOperator(out / t, (k.shape[0], db)), "A", "B")


# ---------------------------------------------------------------------------
# degradability


def _channel_output(kraus: np.ndarray, rho: np.ndarray, da: int, din: int) -> np.ndarray:
    """(id_A (x) D)(rho) with D given by Kraus operators (g, dout, din)."""
    t = rho.reshape(da, din, da, din)
    out = np.einsum("geb,abcd,gfd->aecf", kraus, t, kraus.conj())
    dout = kraus.shape[1]
    return out.reshape(da * dout, da * dout)


class _DegradingFit:
    """Least-squares residual and exact Jacobian for a map B -> E given as W : B -> E (x) G.

    Residual rows are (id (x) D)(src) - dst followed by W^dagger W - I, so a
    zero residual is an exact trace-preserving solution.  W is stored as a
    complex array (dout, dg, din) flattened into (Re, Im).
    """

    def __init__(self, src, dst, da, din, dout, dg):
        self.src = src.reshape(da, din, da, din)
        self.dst = dst.reshape(da, dout, da, dout)
        self.da, self.din, self.dout, self.dg = da, din, dout, dg
        self.npar = dout * dg * din

    def unpack(self, x):
        return (x[: self.npar] + 1j * x[self.npar :]).reshape(self.dout, self.dg, self.din)

    def output_error(self, w):
        return np.einsum("egb,abcd,fgd->aecf", w, self.src, w.conj()) - self.dst

    def residual(self, x):
        w = self.unpack(x)
        wm = w.reshape(-1, self.din)
        q = wm.conj().T @ wm - np.eye(self.din)
        r = np.concatenate([self.output_error(w).reshape(-1), q.reshape(-1)])
        return np.concatenate([r.real, r.imag])

    def jacobian(self, x):
        w = self.unpack(x)
        da, din, dout, npar = self.da, self.din, self.dout, self.npar
        # dr = A dw + B conj(dw)
        p = np.einsum("abcd,fgd->abcfg", self.src, w.conj())
        eye_e = np.eye(dout)
        t1 = np.einsum("eE,abcfg->aecfEgb", eye_e, p).reshape((da * dout) ** 2, npar)
        t2 = np.einsum("fE,cbaeg->aecfEgb", eye_e, p.conj()).reshape((da * dout) ** 2, npar)
        wm = w.reshape(-1, din)
        eye_i = np.eye(din)
        s1 = np.einsum("ri,jk->ijrk", wm.conj(), eye_i).reshape(din * din, npar)
        s2 = np.einsum("rj,ik->ijrk", wm, eye_i).reshape(din * din, npar)
        a = np.vstack([t1, s1])
        b = np.vstack([t2, s2])
        j = np.hstack([a + b, 1j * (a - b)])
        return np.vstack([j.real, j.imag])


def degradability_residual(
    rho: DensityOperator,
    direction: str = "degradable",
    restarts: int = 4,
    seed: int = 0,
    max_nfev: int = 500,
) -> DegradabilityReport:
    """Minimize ||(id (x) D)(rho_AB) - phi_AE||_F over channels D : B -> E.

    With ``direction="antidegradable"`` the roles of B and E are swapped.
    D is given by a Stinespring isometry into the output times an
    environment of dimension dim B * dim E.  The fit is a least-squares
    problem with the isometry condition as extra residual rows; the final
    map is projected onto the isometries before the residual is reported.
    A small residual is numerical evidence, not a proof.
    """
    if direction not in ("degradable", "antidegradable"):
        raise ValueError(f"unknown direction {direction!r}")
    phi, da, db, de = _purification_matrix(rho)
    psi = phi.reshape(-1)
    rho_ab = reduced_from_vector(psi, (da, db, de), [0, 1])
    rho_ae = reduced_from_vector(psi, (da, db, de), [0, 2])
    if direction == "degradable":
        src, dst, din, dout = rho_ab, rho_ae, db, de
    else:
        src, dst, din, dout = rho_ae, rho_ab, de, db
    fit = _DegradingFit(src, dst, da, din, dout, db * de)

    def run(r):
        w0 = random_isometry(dout * fit.dg, din, rng_for(seed, r))
        x0 = np.concatenate([w0.real.reshape(-1), w0.imag.reshape(-1)])
        res = least_squares(
            fit.residual, x0, jac=fit.jacobian, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev
        )
        w = _polar(fit.unpack(res.x).reshape(-1, din)).reshape(dout, fit.dg, din)
        return float(np.linalg.norm(fit.output_error(w))), w, bool(res.status > 0)

    runs = []
    for r in range(restarts):
        runs.append(run(r))
        if runs[-1][0] < 1e-9:
            break
    k = best_index([-x[0] for x in runs])
    kraus = np.transpose(runs[k][1], (1, 0, 2))
    return DegradabilityReport(
        residual=runs[k][0],
        degrading_map=KrausMap(list(kraus), trace_preserving=True),
        direction=direction,
        converged=runs[k][2],
        history=tuple(x[0] for x in runs),
    )


def degrading_residual_of(rho: DensityOperator, report: DegradabilityReport) -> float:
    """Re-evaluate the residual of a reported degrading map."""
    phi, da, db, de = _purification_matrix(rho)
    psi = phi.reshape(-1)
    rho_ab = reduced_from_vector(psi, (da, db, de), [0, 1])
    rho_ae = reduced_from_vector(psi, (da, db, de), [0, 2])
    kraus = report.degrading_map.stacked()
    if report.direction == "degradable":
        out = _channel_output(kraus, rho_ab, da, db)
        return float(np.linalg.norm(out - rho_ae))
    out = _channel_output(kraus, rho_ae, da, de)
    return float(np.linalg.norm(out - rho_ab))


# ---------------------------------------------------------------------------
# falsifiers for weaker dominance conditions


def _s(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh(_herm(m))
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def info_gap(phi: np.ndarray, w: np.ndarray, a2: int, db: int, de: int) -> float:
    """I(A';B) - I(A';E) after the pre-channel with Stinespring isometry w : A -> A' (x) G."""
    dg = w.shape[0] // a2
    psi = (w @ phi).reshape(-1)
    dims = (a2, dg, db, de)
    s_b = entropy_of(reduced_from_vector(psi, dims, [2]))
    s_e = entropy_of(reduced_from_vector(psi, dims, [3]))
    s_ge = entropy_of(reduced_from_vector(psi, dims, [1, 3]))
    s_gb = entropy_of(reduced_from_vector(psi, dims, [1, 2]))
    # S(A'B) = S(GE), S(A'E) = S(GB) on the pure state
    return (s_b - s_ge) - (s_e - s_gb)


def info_degradable_falsify(rho: DensityOperator, samples: int = 500, seed: int = 0) -> FalsifierReport:
    """Search for a pre-channel A -> A' with I(A';B) < I(A';E).

    Sample 0 is the identity channel; the rest are random Stinespring
    isometries with dim A' drawn from 1..d_A^2.
    """
    phi, da, db, de = _purification_matrix(rho)
    gaps = []
    args = []
    for i in range(samples):
        if i == 0:
            w = np.eye(da, dtype=complex)
            a2 = da
        else:
            rng = rng_for(seed, i)
            a2 = int(rng.integers(1, da * da + 1))
            dg_min = -(-da // a2)
            dg = int(rng.integers(dg_min, max(dg_min, da) + 1))
            w = random_isometry(a2 * dg, da, rng)
        gaps.append(info_gap(phi, w, a2, db, de))
        args.append((a2, w))
    k = best_index([-g for g in gaps])
    return FalsifierReport(
        worst_gap=float(gaps[k]),
        worst_index=k,
        samples=samples,
        seed=seed,
        mean_gap=float(np.mean(gaps)),
        argument=args[k],
    )


def _tensor_power(rho: DensityOperator, n: int) -> DensityOperator:
    """rho^{(x)n} regrouped as (A1...An) (x) (B1...Bn)."""
    da, db = _bipartite(rho)
    m = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        m = np.kron(m, rho.matrix)
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    m = permute_subsystems(m, [da, db] * n, perm)
    return DensityOperator(m, (da**n, db**n), ("A", "B"))


def tensor_power(rho: DensityOperator, n: int, budget_dim: int = DEFAULT_BUDGET_DIM) -> DensityOperator:
    if n < 1:
        raise ValueError("n must be >= 1")
    total = rho.dim**n
    if total > budget_dim:
        raise BudgetError(f"dimension {total} of {n} copies exceeds budget {budget_dim}")
    return _tensor_power(rho, n)


def less_noisy_gap(phi: np.ndarray, kraus: np.ndarray, db: int, de: int) -> float:
    """I(M;B) - I(M;E) for an instrument given as Kraus array (m, a2, dA)."""
    chi = np.einsum("mia,ar->mir", kraus, phi)  # (m, a2, db*de)
    m, a2, _ = chi.shape
    psi = phi.reshape(-1)
    da = phi.shape[0]
    s_b = entropy_of(reduced_from_vector(psi, (da, db, de), [1]))
    s_e = entropy_of(reduced_from_vector(psi, (da, db, de), [2]))
    t = chi.reshape(m, a2, db, de)
    rb = np.einsum("mabe,mace->mbc", t, t.conj())
    re = np.einsum("mabe,mabf->mef", t, t.conj())
    sb = sum(_s(x) for x in rb)
    se = sum(_s(x) for x in re)
    return (s_b - sb) - (s_e - se)


def less_noisy_falsify(
    rho: DensityOperator,
    n: int = 1,
    samples: int = 500,
    seed: int = 0,
    budget_dim: int = DEFAULT_BUDGET_DIM,
) -> FalsifierReport:
    """Search for an instrument on A^n with I(M;B^n) < I(M;E^n).

    Sample 0 is the trivial instrument (gap exactly 0); the rest read their
    Kraus operators off random isometries A^n -> A' (x) M.
    """
    big = tensor_power(rho, n, budget_dim)
    phi, da, db, de = _purification_matrix(big)
    gaps, args = [], []
    for i in range(samples):
        if i == 0:
            kraus = np.eye(da, dtype=complex)[None]
        else:
            rng = rng_for(seed, i)
            m = int(rng.integers(2, min(da * da, 16) + 1))
            a2 = int(rng.integers(1, da + 1))
            while a2 * m < da:
                a2 += 1
            kraus = Instrument.from_isometry(random_isometry(a2 * m, da, rng), m).stacked()
        gaps.append(less_noisy_gap(phi, kraus, db, de))
        args.append(kraus)
    k = best_index([-g for g in gaps])
    return FalsifierReport(
        worst_gap=float(gaps[k]),
        worst_index=k,
        samples=samples,
        seed=seed,
        mean_gap=float(np.mean(gaps)),
        argument=Instrument(list(enumerate(args[k])), complete=True),
    )


# ---------------------------------------------------------------------------
# compositions and closed forms


@dataclass(frozen=True)
class MixtureCertificate:
    state: DensityOperator
    flag_isometry: np.ndarray
    instrument: Instrument
    projectors: tuple[np.ndarray, np.ndarray]
    weight: float


def _support_projector(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    w, v = np.linalg.eigh(_herm(m))
    cols = v[:, w > tol]
    return cols @ cols.conj().T


def orthogonal_mixture(
    rho0: DensityOperator,
    rho1: DensityOperator,
    p: float,
    instruments: tuple[Instrument, Instrument] | None = None,
) -> MixtureCertificate:
    """p rho0 + (1-p) rho1 for states whose A-marginals have orthogonal supports.

    Returns the flag isometry V = |0>_X (x) P0 + |1>_X (x) P1 and the
    composed instrument {K^0_m P0} u {K^1_m P1}.  Its value is
    p I_0 + (1-p) I_1 where I_x is the value of instrument x on rho_x.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    if rho0.dims[:1] != rho1.dims[:1] or _bipartite(rho0) != _bipartite(rho1):
        raise ValueError("components must have equal dimensions")
    da, db = _bipartite(rho0)
    a0 = ptrace(rho0.matrix, (da, db), [0])
    a1 = ptrace(rho1.matrix, (da, db), [0])
    from scipy.linalg import sqrtm

    overlap = np.linalg.norm(sqrtm(_herm(a0) + 0j) @ sqrtm(_herm(a1) + 0j), 2)
    if overlap >= 1e-10 and 0.0 < p < 1.0:
        raise ValueError(f"A-marginals are not orthogonal (overlap {overlap:.3g})")
    p0 = _support_projector(a0) if p > 0 else np.zeros((da, da))
    p1 = np.eye(da) - p0
    if instruments is None:
        instruments = (Instrument.trivial(da), Instrument.trivial(da))
    t0, t1 = instruments
    a2 = max(t0.dim_out, t1.dim_out)
    ops = []
    for tag, t, proj in ((0, t0, p0), (1, t1, p1)):
        for lab, k in t.outcomes:
            pad = np.zeros((a2, da), dtype=complex)
            pad[: k.shape[0]] = k @ proj
            ops.append(((tag, lab), pad))
    flag = np.vstack([p0, p1])  # |x> (x) P_x stacked as X-major rows
    state = DensityOperator(p * rho0.matrix + (1 - p) * rho1.matrix, (da, db), ("A", "B"))
    return MixtureCertificate(state, flag, Instrument(ops, complete=True), (p0, p1), p)


def complete_filter(k: np.ndarray, tol: float = 1e-14) -> Instrument:
    """Scale a filter so c K^dagger K <= I and complete it with rank-one measure-and-prepare pieces.

    c = 1/lambda_max(K^dagger K); the remainder I - c K^dagger K =
    sum_k mu_k |a_k><a_k| contributes Kraus operators sqrt(mu_k)|0><a_k|.
    """
    k = np.asarray(k, dtype=complex)
    g = k.conj().T @ k
    lmax = float(np.linalg.eigvalsh(_herm(g))[-1])
    if lmax <= 0:
        raise ValueError("zero filter")
    c = 1.0 / lmax
    ops = [("filter", math.sqrt(c) * k)]
    w, v = spectral_decomposition(np.eye(k.shape[1]) - c * g)
    e0 = np.eye(k.shape[0])[0]
    for i, mu in enumerate(w):
        if mu > tol:
            ops.append((("rest", i), math.sqrt(mu) * np.outer(e0, v[:, i].conj())))
    return Instrument(ops, complete=True)


def rho_s_closed_form(s: float) -> float:
    """(2/3) max{h(s/2) - h((1+s)/2), 0} for the rho(s) family."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s!r} outside [0, 1]")
    return 2.0 / 3.0 * max(binary_entropy(s / 2) - binary_entropy((1 + s) / 2), 0.0)


def ad_closed_form(gamma: float) -> float:
    """I(A>B) of the amplitude damping Choi state, h((1-g)/2) - h(g/2)."""
    return binary_entropy((1 - gamma) / 2) - binary_entropy(gamma / 2)


def tensor_instrument(t: Instrument, n: int) -> Instrument:
    ops = [((), np.ones((1, 1), dtype=complex))]
    for _ in range(n):
        ops = [(lab + (m,), np.kron(k, km)) for lab, k in ops for m, km in t.outcomes]
    return Instrument(ops, complete=True)


@dataclass(frozen=True)
class GdsCheck:
    d0: int
    d1: int
    n: int
    sigma0_value: float
    canonical_value: float
    optimizer_value: float
    sigma0_residual: float
    canonical_ok: bool
    optimizer_ok: bool
    sigma0_degradable: bool

    @property
    def ok(self) -> bool:
        return self.canonical_ok and self.optimizer_ok and self.sigma0_degradable


def gds_single_letter_check(
    d0: int,
    d1: int,
    n: int = 1,
    restarts: int = 8,
    seed: int = 0,
    outcomes: int | None = None,
    budget_dim: int = DEFAULT_BUDGET_DIM,
    degrade_restarts: int = 4,
) -> GdsCheck:
    """Compare I(A>B) of sigma0, the canonical instrument on n copies, and a free optimizer.

    The canonical value must equal n I(A>B)_sigma0 within 1e-6 and the free
    optimizer must not exceed it by more than 1e-3.
    """
    rho = gds_state(d0, d1)
    big = tensor_power(rho, n, budget_dim)
    sigma0 = gds_sigma0(d0, d1)
    a = coherent_information(sigma0, "A", "B")
    b = instrument_coherent_info(tensor_instrument(gds_instrument(d0, d1), n), big)
    c = d1_lower_bound(big, outcomes=outcomes, restarts=restarts, seed=seed).value
    deg = degradability_residual(sigma0, "degradable", restarts=degrade_restarts, seed=seed)
    return GdsCheck(
        d0=d0,
        d1=d1,
        n=n,
        sigma0_value=a,
        canonical_value=b,
        optimizer_value=c,
        sigma0_residual=deg.residual,
        canonical_ok=abs(b - n * a) <= 1e-6,
        optimizer_ok=c <= n * a + 1e-3,
        sigma0_degradable=deg.residual < DEGRADABLE_THRESHOLD,
    )
