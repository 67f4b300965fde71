"""Command-line entry point.

Exit codes: 0 success, 1 invariant violation, 2 budget or argument error,
3 spin-alignment counterexample candidate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import __version__
from .channels import choi_of_map
from .distill import (
    BudgetError,
    d1_hat,
    d1_lower_bound,
    degradability_residual,
    rho_s_closed_form,
    gds_single_letter_check,
    info_degradable_falsify,
    less_noisy_falsify,
    orthogonal_mixture,
    q1_channel,
)
from .families import (
    GdsSpec,
    ad_choi,
    amplitude_damping,
    flagged_ad_choi,
    gds_channel,
    gds_sigma0,
    gds_state,
    rho_s,
    rho_s_components,
)
from .majorization import tensor_rearrangement_check
from .qcore import DensityOperator, random_density_matrix, random_pure_state
from .spinalign import BudgetError as SearchBudgetError
from .spinalign import (
    AlignmentInstance,
    aligned_inputs,
    bitstrings,
    conjecture_search,
    erasing_output,
    n1_alignment_check,
    renyi2_objective,
    renyi2_overlap_bound,
)

EXIT_OK, EXIT_VIOLATION, EXIT_BUDGET, EXIT_CANDIDATE = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_BUDGET):
        super().__init__(message)
        self.code = code


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return _jsonable(np.stack([x.real, x.imag], axis=-1).tolist())
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _diag_state(values: list[float]) -> DensityOperator:
    v = np.asarray(values, dtype=float)
    if np.any(v < 0) or abs(v.sum() - 1) > 1e-10:
        raise CliError(f"eigenvalues {values} are not a probability vector")
    return DensityOperator(np.diag(v), [len(v)])


# ---------------------------------------------------------------------------
# commands; each returns (results, exit_code)


def cmd_repro_rho_s(args):
    rows = []
    worst = 0.0
    for s in args.s:
        if not 0.0 <= s <= 1.0:
            raise CliError(f"s={s} outside [0, 1]")
        closed = rho_s_closed_form(s)
        rep = d1_lower_bound(rho_s(s), outcomes=args.outcomes, restarts=args.restarts, seed=args.seed)
        gap = abs(rep.value - closed)
        worst = max(worst, gap)
        rows.append({"s": s, "closed_form": closed, "optimizer": rep.value, "gap": gap})
    code = EXIT_VIOLATION if worst > args.tol else EXIT_OK
    return {"rows": rows, "max_gap": worst}, code


def cmd_gds(args):
    total = (args.d0 + args.d1) ** (2 * args.n)
    if total > args.budget_dim:
        raise CliError(f"dimension {total} of {args.n} copies exceeds budget {args.budget_dim}")
    rep = gds_single_letter_check(
        args.d0, args.d1, args.n, restarts=args.restarts, seed=args.seed, outcomes=args.outcomes, budget_dim=args.budget_dim
    )
    res = {
        "d0": args.d0,
        "d1": args.d1,
        "n": args.n,
        "a_sigma0_coherent_info": rep.sigma0_value,
        "b_canonical_instrument": rep.canonical_value,
        "c_optimizer": rep.optimizer_value,
        "n_times_a": args.n * rep.sigma0_value,
        "sigma0_residual": rep.sigma0_residual,
        "canonical_ok": rep.canonical_ok,
        "optimizer_ok": rep.optimizer_ok,
        "sigma0_degradable": rep.sigma0_degradable,
    }
    return res, EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_spinalign(args):
    s0 = _diag_state(args.sigma0)
    s1 = _diag_state(args.sigma1)
    if args.mode == "n1":
        rep = n1_alignment_check(s0, s1, args.p0, trials=args.trials, seed=args.seed)
        res = _search_result(rep)
        code = EXIT_VIOLATION if rep.worst_gap < -1e-9 else EXIT_OK
        return res, code
    if args.mode == "search":
        p = args.p if args.p else [1.0 / 2**args.n] * 2**args.n
        if len(p) != 2**args.n:
            raise CliError(f"need {2**args.n} weights for n={args.n}")
        rep = conjecture_search(s0, s1, args.n, p, trials=args.trials, seed=args.seed, budget_dim=args.budget_dim)
        res = _search_result(rep)
        flagged = rep.worst_gap < args.cex_threshold
        res["candidate"] = flagged
        return res, EXIT_CANDIDATE if flagged else EXIT_OK
    return _renyi2_suite(args, s0, s1)


def _search_result(rep):
    return {
        "n": rep.n,
        "aligned_value": rep.aligned_value,
        "best_value": rep.best_value,
        "worst_gap": rep.worst_gap,
        "worst_trial": rep.worst_trial,
        "argmin": {"".join(map(str, k)): v for k, v in rep.argmin.items()},
        "trials": rep.trials,
        "seed": rep.seed,
        "candidate": rep.candidate,
    }


def _renyi2_suite(args, s0, s1):
    n = args.n
    d0, d1 = s0.dim, s1.dim
    if (d0 * d1) ** n > args.budget_dim:
        raise CliError(f"output dimension {(d0 * d1) ** n} exceeds budget {args.budget_dim}")
    rng = np.random.default_rng(args.seed)
    p = args.p if args.p else [1.0 / 2**n] * 2**n
    aligned = AlignmentInstance(n, p, s0, s1, aligned_inputs(s0, s1, n))
    ref = renyi2_objective(aligned).entropy
    alignment_violations = 0
    bound_violations = 0
    worst = np.inf
    for _ in range(args.trials):
        inputs = {}
        for bits in bitstrings(n):
            dim = int(np.prod([d0 if b == 0 else d1 for b in bits]))
            if rng.random() < 0.5:
                v = random_pure_state(dim, rng)
                m = np.outer(v, v.conj())
            else:
                m = random_density_matrix(dim, rng=rng)
            inputs[bits] = DensityOperator(m, [dim])
        val = renyi2_objective(AlignmentInstance(n, p, s0, s1, inputs)).entropy
        worst = min(worst, val - ref)
        alignment_violations += int(val < ref - 1e-9)
        outs = {b: erasing_output(inputs[b].matrix, b, s0.matrix, s1.matrix) for b in inputs}
        for x in outs:
            for y in outs:
                lhs = float(np.real(np.vdot(outs[x], outs[y])))
                bound_violations += int(lhs > renyi2_overlap_bound(x, y, s0, s1) + 1e-10)
    res = {
        "n": n,
        "aligned_renyi2": ref,
        "worst_gap": float(worst),
        "alignment_violations": alignment_violations,
        "bound_violations": bound_violations,
        "trials": args.trials,
        "seed": args.seed,
    }
    return res, EXIT_VIOLATION if alignment_violations or bound_violations else EXIT_OK


def _family_state(args) -> DensityOperator:
    fam = args.family
    if fam == "ad":
        return ad_choi(args.gamma)
    if fam == "flagged":
        return flagged_ad_choi(args.p, args.gamma0, args.gamma1)
    if fam == "rho_s":
        return rho_s(args.s)
    if fam == "gds":
        return gds_state(args.d0, args.d1)
    if fam == "gds_sigma0":
        return gds_sigma0(args.d0, args.d1)
    raise CliError(f"unknown family {fam!r}")


def _degrade_block(rho: DensityOperator, args) -> dict:
    deg = degradability_residual(rho, "degradable", restarts=args.degrade_restarts, seed=args.seed)
    anti = degradability_residual(rho, "antidegradable", restarts=args.degrade_restarts, seed=args.seed)
    info = info_degradable_falsify(rho, samples=args.samples, seed=args.seed)
    ln = less_noisy_falsify(rho, n=1, samples=args.samples, seed=args.seed, budget_dim=args.budget_dim)
    return {
        "degradable_residual": deg.residual,
        "antidegradable_residual": anti.residual,
        "numerically_degradable": deg.numerically_degradable,
        "numerically_antidegradable": anti.numerically_degradable,
        "info_degradable_worst_gap": info.worst_gap,
        "info_degradable_violated": info.violated,
        "less_noisy_worst_gap": ln.worst_gap,
        "less_noisy_violated": ln.violated,
    }


def cmd_degrade(args):
    rho = _family_state(args)
    res = {"family": args.family, "state": _degrade_block(rho, args)}
    if args.family == "rho_s":
        useful, junk = rho_s_components(args.s)
        cert = orthogonal_mixture(DensityOperator(useful, (3, 3)), DensityOperator(junk, (3, 3)), 2.0 / 3.0)
        res["blocks"] = {
            "weight": cert.weight,
            "useful": _degrade_block(DensityOperator(useful, (3, 3)), args),
            "junk": _degrade_block(DensityOperator(junk, (3, 3)), args),
            "projectors": [cert.projectors[0], cert.projectors[1]],
        }
    return res, EXIT_OK


def cmd_distill(args):
    rho = _family_state(args)
    lb = d1_lower_bound(rho, outcomes=args.outcomes, restarts=args.restarts, seed=args.seed)
    hat = d1_hat(rho, restarts=args.restarts, seed=args.seed)
    res = {
        "family": args.family,
        "d1_lower_bound": lb.value,
        "trivial_instrument": lb.trivial_value,
        "d1_hat": hat.value,
        "filter": hat.argument,
    }
    if args.family == "rho_s":
        res["closed_form"] = rho_s_closed_form(args.s)
    code = EXIT_VIOLATION if lb.value > hat.value + 1e-6 else EXIT_OK
    return res, code


def cmd_capacity(args):
    if args.channel == "ad":
        ch = amplitude_damping(args.gamma)
    else:
        spec = GdsSpec(args.d0, args.d1, args.d0p, args.d1p)
        ch = gds_channel(spec)
    rep = q1_channel(ch, restarts=args.restarts, seed=args.seed)
    res = {
        "channel": args.channel,
        "q1": rep.value,
        "maximally_entangled_input": rep.trivial_value,
        "choi_coherent_info": None,
        "input": rep.argument,
    }
    from .qcore import coherent_information

    res["choi_coherent_info"] = coherent_information(choi_of_map(ch), "A", "B")
    return res, EXIT_OK


def cmd_majorize(args):
    rng = np.random.default_rng(args.seed)
    failures = 0
    for _ in range(args.trials):
        db, dc = (int(x) for x in rng.integers(1, 5, size=2))
        ops = []
        for d in (db, db, dc, dc):
            rank = int(rng.integers(1, d + 1))
            g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
            ops.append(g @ g.conj().T)
        _, _, ok = tensor_rearrangement_check(*ops)
        failures += int(not ok)
    res = {"trials": args.trials, "failures": failures, "seed": args.seed}
    return res, EXIT_VIOLATION if failures else EXIT_OK


COMMANDS = {
    "repro-rho-s": cmd_repro_rho_s,
    "gds": cmd_gds,
    "spinalign": cmd_spinalign,
    "degrade": cmd_degrade,
    "distill": cmd_distill,
    "capacity": cmd_capacity,
    "majorize": cmd_majorize,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=32)
    common.add_argument("--outcomes", type=int, default=None, help="instrument outcomes (default d_A^2)")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--budget-dim", type=int, default=256, help="largest Hilbert space dimension allowed")
    common.add_argument("--tol", type=float, default=1e-3)
    common.add_argument("--timings", action="store_true", help="record wall-clock timings in the output")

    family = argparse.ArgumentParser(add_help=False)
    family.add_argument("--family", choices=("ad", "flagged", "rho_s", "gds", "gds_sigma0"), default="ad")
    family.add_argument("--gamma", type=float, default=0.2)
    family.add_argument("--p", type=float, default=0.5)
    family.add_argument("--gamma0", type=float, default=0.1)
    family.add_argument("--gamma1", type=float, default=0.9)
    family.add_argument("--s", type=float, default=0.8)
    family.add_argument("--d0", type=int, default=2)
    family.add_argument("--d1", type=int, default=1)

    parser = argparse.ArgumentParser(prog="distillkit", description="One-way distillation and spin-alignment numerics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repro-rho-s", aliases=["repro-eq48"], parents=[common], help="optimizer vs closed form for the rho(s) family")
    p.add_argument("--s", type=_floats, default=[0.0, 0.5, 0.8, 1.0], help="comma-separated s grid")
    p.set_defaults(command="repro-rho-s")

    p = sub.add_parser("gds", parents=[common], help="single-letter check for GDS states")
    p.add_argument("d0", type=int)
    p.add_argument("d1", type=int)
    p.add_argument("n", type=int)

    p = sub.add_parser("spinalign", parents=[common], help="spin-alignment suites")
    p.add_argument("--mode", choices=("n1", "search", "renyi2"), default="n1")
    p.add_argument("--sigma0", type=_floats, default=[0.9, 0.1], help="eigenvalues of sigma0")
    p.add_argument("--sigma1", type=_floats, default=[0.6, 0.4], help="eigenvalues of sigma1")
    p.add_argument("--p0", type=float, default=0.5)
    p.add_argument("--p", type=_floats, default=None, help="weights over bit-strings")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--cex-threshold", type=float, default=-1e-6, help="gap below which a candidate is flagged")

    p = sub.add_parser("degrade", parents=[common, family], help="degradability residuals and falsifiers")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--degrade-restarts", type=int, default=4)

    sub.add_parser("distill", parents=[common, family], help="D1 lower bound and filter relaxation")

    p = sub.add_parser("capacity", parents=[common], help="single-letter coherent information of a channel")
    p.add_argument("--channel", choices=("ad", "gds"), default="ad")
    p.add_argument("--gamma", type=float, default=0.2)
    p.add_argument("--d0", type=int, default=1)
    p.add_argument("--d1", type=int, default=1)
    p.add_argument("--d0p", type=int, default=1)
    p.add_argument("--d1p", type=int, default=1)

    p = sub.add_parser("majorize", parents=[common], help="random tensor-rearrangement majorization suite")
    p.add_argument("--trials", type=int, default=200)
    return parser


def _config(args) -> dict:
    skip = {"command", "format", "timings"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _scalars(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_scalars(v, key + "."))
        elif isinstance(v, (int, float, str, bool)) or v is None:
            out[key] = v
    return out


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
    results = doc["results"]
    rows = results.get("rows") if isinstance(results, dict) else None
    if fmt == "csv":
        buf = io.StringIO()
        table = [_scalars(r) for r in rows] if rows is not None else [_scalars(results)]
        cols = sorted({c for r in table for c in r})
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in table:
            w.writerow(r)
        return buf.getvalue()
    lines = [f"{doc['command']} (distillkit {doc['version']})"]
    if rows is not None:
        for r in rows:
            lines.append("  " + "  ".join(f"{k}={_fmt(v)}" for k, v in _scalars(r).items()))
        rest = {k: v for k, v in results.items() if k != "rows"}
    else:
        rest = results
    for k, v in _scalars(rest).items():
        lines.append(f"  {k}: {_fmt(v)}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        results, code = COMMANDS[args.command](args)
    except (CliError, BudgetError, SearchBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "code", EXIT_BUDGET)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    doc = {
        "command": args.command,
        "config": _config(args),
        "results": results,
        "timings": {"total_seconds": time.perf_counter() - start} if args.timings else {},
        "version": __version__,
    }
    sys.stdout.write(render(doc, args.format))
    if code == EXIT_CANDIDATE:
        print("CANDIDATE COUNTEREXAMPLE: review before drawing conclusions", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
