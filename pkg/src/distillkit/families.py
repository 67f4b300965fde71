"""Explicit states and channels: amplitude damping, the rho(s) family,
generalized direct-sum (GDS) states and channels, and partially erasing
channels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import Instrument, KrausMap, choi_of_map
from .qcore import DensityOperator, permute_subsystems, spectral_decomposition


def _check_prob(x: float, name: str):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name}={x!r} outside [0, 1]")


def amplitude_damping(gamma: float) -> KrausMap:
    """Qubit amplitude damping: E0 = diag(1, sqrt(1-g)), E1 = sqrt(g)|0><1|."""
    _check_prob(gamma, "gamma")
    e0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    e1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    return KrausMap([e0, e1], trace_preserving=True)


def ad_choi(gamma: float) -> DensityOperator:
    """Normalized Choi state of amplitude damping, subsystems (R, B)."""
    return choi_of_map(amplitude_damping(gamma), labels=("R", "B"))


def flagged_ad_choi(p: float, gamma0: float, gamma1: float) -> DensityOperator:
    """p rho(g0) (x) |0><0|_F + (1-p) rho(g1) (x) |1><1|_F on (R, B, F)."""
    _check_prob(p, "p")
    f0 = np.diag([1.0, 0.0])
    f1 = np.diag([0.0, 1.0])
    m = p * np.kron(ad_choi(gamma0).matrix, f0) + (1 - p) * np.kron(ad_choi(gamma1).matrix, f1)
    return DensityOperator(m, (2, 2, 2), ("R", "B", "F"))


def _ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d)
    v[i] = 1.0
    return v


def _op(d: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((d, d))
    m[i, j] = 1.0
    return m


def rho_s_components(s: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-trace pieces (useful, junk) with rho_s = (2/3) useful + (1/3) junk."""
    _check_prob(s, "s")
    r = math.sqrt(s)
    useful = 0.5 * (
        np.kron(_op(3, 0, 0), s * _op(3, 0, 0) + (1 - s) * _op(3, 2, 2))
        + r * np.kron(_op(3, 0, 1), _op(3, 0, 2))
        + r * np.kron(_op(3, 1, 0), _op(3, 2, 0))
        + np.kron(_op(3, 1, 1), _op(3, 2, 2))
    )
    junk = np.kron(_op(3, 2, 2), _op(3, 2, 2))
    return useful, junk


def rho_s(s: float) -> DensityOperator:
    """Qutrit-qutrit state: a damping-type block on span{|0>,|1>}_A plus |22><22|."""
    useful, junk = rho_s_components(s)
    return DensityOperator(2.0 / 3.0 * useful + 1.0 / 3.0 * junk, (3, 3), ("A", "B"))


# ---------------------------------------------------------------------------
# generalized direct-sum states


def _check_dims(*ds):
    for d in ds:
        if int(d) != d or d < 1:
            raise ValueError(f"block dimensions must be positive integers, got {ds}")


def gds_vectors(d0: int, d1: int) -> np.ndarray:
    """Rows are |psi_ij> = (|i>|j> + |j+d0>|i+d1>)/sqrt2 on (C^d0+C^d1) (x) (C^d1+C^d0)."""
    _check_dims(d0, d1)
    d = d0 + d1
    rows = []
    for i in range(d0):
        for j in range(d1):
            v = np.kron(_ket(d, i), _ket(d, j)) + np.kron(_ket(d, j + d0), _ket(d, i + d1))
            rows.append(v / math.sqrt(2.0))
    return np.array(rows)


def gds_state(d0: int, d1: int) -> DensityOperator:
    """Uniform mixture of the d0*d1 orthonormal vectors |psi_ij>."""
    vs = gds_vectors(d0, d1)
    m = vs.T @ vs / (d0 * d1)
    d = d0 + d1
    return DensityOperator(m, (d, d), ("A", "B"))


def gds_kraus(d0: int, d1: int) -> list[tuple[tuple[int, int], np.ndarray]]:
    """K_ij = |i><i|/sqrt(d1) + |d0+j><d0+j|/sqrt(d0)."""
    _check_dims(d0, d1)
    d = d0 + d1
    out = []
    for i in range(d0):
        for j in range(d1):
            k = _op(d, i, i) / math.sqrt(d1) + _op(d, d0 + j, d0 + j) / math.sqrt(d0)
            out.append(((i, j), k))
    return out


def gds_instrument(d0: int, d1: int) -> Instrument:
    return Instrument(gds_kraus(d0, d1), complete=True)


def gds_sigma0(d0: int, d1: int) -> DensityOperator:
    """Post-measurement state of the (0,0) outcome, d0 d1 (K00 (x) I) rho (K00 (x) I)^dagger."""
    rho = gds_state(d0, d1).matrix
    k = np.kron(gds_kraus(d0, d1)[0][1], np.eye(d0 + d1))
    m = d0 * d1 * (k @ rho @ k.conj().T)
    d = d0 + d1
    return DensityOperator(m, (d, d), ("A", "B"))


def gds_sigma0_explicit(d0: int, d1: int) -> DensityOperator:
    """Same state assembled term by term from its closed form."""
    _check_dims(d0, d1)
    d = d0 + d1
    v = np.kron(_ket(d, 0), _ket(d, 0)) / math.sqrt(d1) + np.kron(_ket(d, d0), _ket(d, d1)) / math.sqrt(d0)
    m = 0.5 * np.outer(v, v)
    for j in range(1, d1):
        u = np.kron(_ket(d, 0), _ket(d, j))
        m += np.outer(u, u) / (2 * d1)
    for i in range(1, d0):
        u = np.kron(_ket(d, d0), _ket(d, i + d1))
        m += np.outer(u, u) / (2 * d0)
    return DensityOperator(m, (d, d), ("A", "B"))


# ---------------------------------------------------------------------------
# generalized direct-sum channel


@dataclass(frozen=True)
class GdsSpec:
    d0: int
    d1: int
    d0p: int
    d1p: int
    n: int = 1

    def __post_init__(self):
        _check_dims(self.d0, self.d1, self.d0p, self.d1p, self.n)

    @property
    def D0(self) -> int:
        return max(self.d0p, self.d1)

    @property
    def D1(self) -> int:
        return max(self.d0, self.d1p)

    @property
    def dim_in(self) -> int:
        return self.d0 + self.d1

    @property
    def dim_out(self) -> int:
        return self.D0 + self.D1


def gds_kraus_blocks(spec: GdsSpec) -> np.ndarray:
    """Block-diagonal Kraus operators E_(r,t), r < D0, t < D1, shape (D0*D1, D0+D1, d0+d1).

    E_(r,t) = E0 (+) E1 with E0 = |r><t|/sqrt(d0') on block 0 (r < d0', t < d0)
    and E1 = |t><r|/sqrt(d1') on block 1 (r < d1, t < d1').  The diagonal
    blocks are sent to I/d0' and I/d1'; the coherences are carried over as
    X01^T scaled by 1/sqrt(d0' d1'), which is the largest coupling
    compatible with complete positivity.
    """
    d0, d1, a, b = spec.d0, spec.d1, spec.d0p, spec.d1p
    D0, D1 = spec.D0, spec.D1
    ops = np.zeros((D0 * D1, D0 + D1, d0 + d1))
    for r in range(D0):
        for t in range(D1):
            k = r * D1 + t
            if r < a and t < d0:
                ops[k, r, t] = 1.0 / math.sqrt(a)
            if r < d1 and t < b:
                ops[k, D0 + t, d0 + r] = 1.0 / math.sqrt(b)
    return ops


def gds_channel(spec: GdsSpec) -> KrausMap:
    """Trace-preserving GDS channel C^d0 (+) C^d1 -> C^D0 (+) C^D1.

    The environment is C^D0 (x) C^D1 (Kraus index r*D1 + t).
    """
    return KrausMap(list(gds_kraus_blocks(spec)), trace_preserving=True)


def gds_restricted(spec: GdsSpec) -> KrausMap:
    """The GDS channel restricted to the qubit span{|0>, |d0>} (first vector of each block)."""
    ops = gds_restricted_full_env(spec)
    return KrausMap([k for k in ops if np.any(k != 0)], trace_preserving=True)


def gds_restricted_full_env(spec: GdsSpec) -> np.ndarray:
    """All D0*D1 restricted Kraus operators (zeros kept) so the environment is C^D0 (x) C^D1."""
    return gds_kraus_blocks(spec)[:, :, [0, spec.d0]]


def gds_degrading_map(spec: GdsSpec) -> KrausMap:
    """Measure-and-prepare map Y -> Tr(P0 Y) (I_d0'/d0' (x) |0><0|) + Tr(P1 Y) (|0><0| (x) I_d1'/d1').

    Input is the GDS output space C^D0 (+) C^D1, output the environment C^D0 (x) C^D1.
    """
    D0, D1 = spec.D0, spec.D1
    dout = D0 * D1
    ops = []
    for r in range(spec.d0p):
        for y in range(D0):
            k = np.zeros((dout, D0 + D1))
            k[r * D1 + 0, y] = 1.0 / math.sqrt(spec.d0p)
            ops.append(k)
    for t in range(spec.d1p):
        for y in range(D1):
            k = np.zeros((dout, D0 + D1))
            k[0 * D1 + t, D0 + y] = 1.0 / math.sqrt(spec.d1p)
            ops.append(k)
    return KrausMap(ops, trace_preserving=True)


def block_projectors(spec: GdsSpec, side: str = "in") -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projectors onto the two direct summands (input or output side)."""
    if side == "in":
        a, b = spec.d0, spec.d1
    elif side == "out":
        a, b = spec.D0, spec.D1
    else:
        raise ValueError("side must be 'in' or 'out'")
    p0 = np.diag(np.r_[np.ones(a), np.zeros(b)])
    return p0, np.eye(a + b) - p0


# ---------------------------------------------------------------------------
# partially erasing channels


def _preparation_kraus(sigma: DensityOperator):
    w, v = spectral_decomposition(sigma.matrix)
    return [(math.sqrt(mu), v[:, k]) for k, mu in enumerate(w) if mu > 1e-15]


def partially_erasing(sigma0: DensityOperator, sigma1: DensityOperator, x: int) -> KrausMap:
    """N_0(rho) = rho (x) sigma1 and N_1(rho) = sigma0 (x) rho, output on C^d0 (x) C^d1."""
    d0, d1 = sigma0.dim, sigma1.dim
    if x == 0:
        return KrausMap([c * np.kron(np.eye(d0), u[:, None]) for c, u in _preparation_kraus(sigma1)])
    if x == 1:
        return KrausMap([c * np.kron(u[:, None], np.eye(d1)) for c, u in _preparation_kraus(sigma0)])
    raise ValueError(f"x must be 0 or 1, got {x!r}")


def erasing_output(rho: np.ndarray, bits, sigma0: np.ndarray, sigma1: np.ndarray) -> np.ndarray:
    """(N_x1 (x) ... (x) N_xn)(rho) with per-site output ordered B0 B1.

    ``rho`` lives on A_x1 (x) ... (x) A_xn where A_0 = C^d0 and A_1 = C^d1.
    """
    bits = [int(b) for b in bits]
    d0, d1 = sigma0.shape[0], sigma1.shape[0]
    n = len(bits)
    fixed = [sigma1 if b == 0 else sigma0 for b in bits]
    big = rho
    for f in fixed:
        big = np.kron(big, f)
    # current order: free_1..free_n, fixed_1..fixed_n; target: (B0_i, B1_i) per site
    dims = [d0 if b == 0 else d1 for b in bits] + [d1 if b == 0 else d0 for b in bits]
    perm = []
    for i, b in enumerate(bits):
        perm += [i, n + i] if b == 0 else [n + i, i]
    return permute_subsystems(big, dims, perm)
