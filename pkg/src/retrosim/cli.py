"""Command-line interface: ``retrosim {prob,curve,verify,simulate}``.

Exit codes: 0 success, 1 verification failure, 2 usage or parameter error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .causality import analytic_probability, max_probability
from .channels import (ChoiOperator, Erasure, Estimation, IdealClassical, Identity, QuantumState,
                       SymmetricTrace, UniversalCloning, UniversalNot, choi_of, is_copy_channel)
from .config import default_seed
from .errors import CapacityError, ContractViolation, NumericError, PreconditionError, RetroError
from .protocol import realize, simulate
from .sampling import haar_pure_state
from .serialization import dumps, fmt_float, load_spec, matrix_to_json
from .symmetric import compressed_product_state
from . import verify as verify_mod

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

FAMILIES = ("identity", "classical", "erasure", "estimation", "unot", "trace", "trace-full", "cloning")


class UsageError(Exception):
    pass


def build_spec(family: str, d: int, n: int | None, m: int | None):
    if d < 2:
        raise UsageError("--d must be at least 2")
    if family in ("trace", "cloning"):
        if n is None or m is None:
            raise UsageError(f"family {family!r} needs --N and --M")
        if n < 0 or m < 0:
            raise UsageError("--N and --M must be non-negative")
        return SymmetricTrace(d, n, m) if family == "trace" else UniversalCloning(d, n, m)
    simple = {
        "identity": Identity, "classical": IdealClassical, "estimation": Estimation, "unot": UniversalNot,
    }
    if family in simple:
        return simple[family](d)
    if family == "erasure":
        return Erasure(QuantumState.pure(np.eye(d)[0]))
    if family == "trace-full":
        return SymmetricTrace(d, 2, 1, symmetric_domain=False)
    raise UsageError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def _resolve(args):
    if args.spec:
        spec = load_spec(args.spec)
        return spec, (spec if isinstance(spec, ChoiOperator) else choi_of(spec))
    if not args.family:
        raise UsageError("give --family or --spec")
    spec = build_spec(args.family, args.d, args.N, args.M)
    return spec, choi_of(spec)


def _params(args) -> dict:
    if args.spec:
        return {"spec": str(args.spec)}
    out = {"family": args.family, "d": args.d}
    if args.N is not None:
        out["N"] = args.N
    if args.M is not None:
        out["M"] = args.M
    return out


def _emit(text: str, args) -> None:
    sys.stdout.write(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8", newline="")


def _csv_text(header, rows, comments=()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    for c in comments:
        buf.write(f"# {c}\n")
    return buf.getvalue()


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return fmt_float(x)
    return str(x)


def _record(kind: str, params: dict, body: dict, args, started: float) -> dict:
    rec = {"command": kind, "params": params, **body, "version": __version__}
    if getattr(args, "timing", False):
        rec["wall_time_s"] = time.perf_counter() - started
    return rec


def _format_record(rec: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(rec)
    flat = {k: v for k, v in rec.items() if not isinstance(v, (dict, list, tuple))}
    flat.update({f"param_{k}": v for k, v in rec["params"].items()})
    return _csv_text(list(flat), [[_cell(v) for v in flat.values()]])


def cmd_prob(args) -> int:
    started = time.perf_counter()
    spec, choi = _resolve(args)
    cert = max_probability(choi, method=args.method)
    exact = None if isinstance(spec, ChoiOperator) else analytic_probability(spec)
    body = {
        "p_max": cert.p_max,
        "p_upper": cert.p_upper,
        "p_analytic": exact,
        "method": cert.method,
        "residual": cert.min_residual_eig,
        "rho0": matrix_to_json(cert.rho0.matrix),
    }
    _emit(_format_record(_record("prob", _params(args), body, args, started), args.format), args)
    return EXIT_OK


def parse_range(text: str) -> range:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            r = range(int(lo), int(hi) + 1)
        else:
            r = range(int(text), int(text) + 1)
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}; use A..B") from exc
    if not r or r.start < 0:
        raise UsageError(f"empty or negative range {text!r}")
    return r


def cmd_curve(args) -> int:
    started = time.perf_counter()
    d, m = args.d, 1 if args.M is None else args.M
    if d < 2 or m < 0:
        raise UsageError("need --d >= 2 and --M >= 0")
    ns = parse_range(args.N or "1..20")
    classical = 1.0 / d
    rows, skipped = [], []
    for n in ns:
        spec = SymmetricTrace(d, n, m) if n >= m else UniversalCloning(d, n, m)
        exact = analytic_probability(spec)
        try:
            solver = max_probability(choi_of(spec), method="covariant").p_max
        except CapacityError:
            solver = None
            skipped.append(n)
        rows.append((n, float(exact), solver, classical))
    comments = []
    if skipped:
        comments.append(f"p_solver empty for N in {skipped[0]}..{skipped[-1]}: embedded space exceeds capacity")
    if args.format == "json":
        body = {"rows": [{"N": n, "p_analytic": a, "p_solver": s, "classical_limit": c} for n, a, s, c in rows],
                "notes": comments}
        text = dumps(_record("curve", {"d": d, "M": m, "N": f"{ns.start}..{ns.stop - 1}"}, body, args, started))
    else:
        text = _csv_text(["N", "p_analytic", "p_solver", "classical_limit"],
                         [[_cell(v) for v in row] for row in rows], comments)
    _emit(text, args)
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.perf_counter()
    suites = list(verify_mod.SUITES) + ["all"]
    if args.suite not in suites:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(suites)}")
    checks = verify_mod.run(args.suite, seed=args.seed, perturb=args.perturb_choi)
    passed = all(c.passed for c in checks)
    body = {"suite": args.suite, "perturb_choi": args.perturb_choi, "passed": passed,
            "failures": sum(not c.passed for c in checks), "checks": [c.as_dict() for c in checks]}
    rec = _record("verify", {"suite": args.suite, "seed": args.seed}, body, args, started)
    if args.format == "json":
        text = dumps(rec)
    else:
        text = _csv_text(["name", "passed", "residual"],
                         [[c.name, str(c.passed).lower(), _cell(c.residual)] for c in checks])
    _emit(text, args)
    return EXIT_OK if passed else EXIT_FAIL


def _default_input(spec, choi: ChoiOperator, rng_seed: int | None) -> np.ndarray:
    if rng_seed is None:
        psi = np.eye(choi.d_in)[0]
        return np.outer(psi, psi)
    rng = np.random.default_rng(rng_seed)
    if not isinstance(spec, ChoiOperator) and is_copy_channel(spec):
        return compressed_product_state(haar_pure_state(spec.d, rng), spec.N)
    psi = haar_pure_state(choi.d_in, rng)
    return np.outer(psi, psi.conj())


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if args.trials < 1000:
        warnings.warn("fewer than 1000 trials gives a coarse estimate", stacklevel=1)
    spec, choi = _resolve(args)
    cert = max_probability(choi, method=args.method)
    proto = realize(choi, cert.p_max, cert.rho0)
    rho = _default_input(spec, choi, args.input_seed)
    stats = simulate(proto, rho, args.trials, seed=args.seed, workers=args.workers)
    half = 3 * stats.sigma
    body = {
        "p_max": cert.p_max,
        "method": cert.method,
        "residual": cert.min_residual_eig,
        "rho0": matrix_to_json(cert.rho0.matrix),
        "trials": stats.trials,
        "successes": stats.successes,
        "frequency": stats.frequency,
        "success_probability": stats.success_probability,
        "sigma": stats.sigma,
        "interval_3sigma": [stats.success_probability - half, stats.success_probability + half],
        "within_3sigma": stats.within(3.0),
        "conditional_output_fidelity_min": stats.conditional_output_fidelity_min,
        "seed": stats.seed,
        "batches": [{"index": b.index, "trials": b.trials, "successes": b.successes} for b in stats.batches],
    }
    params = {**_params(args), "trials": args.trials, "seed": args.seed}
    _emit(_format_record(_record("simulate", params, body, args, started), args.format), args)
    return EXIT_OK


def _channel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--spec", type=Path, help="explicit-matrix channel file (JSON)")
    p.add_argument("--method", choices=("auto", "covariant", "generic"), default="auto")


def _common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--out", type=Path)
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte stability)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retrosim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prob", help="maximum simulation probability and witness state")
    _channel_args(p)
    _common(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("curve", help="p(N -> M) over a range of N as CSV")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--N", default="1..20", help="range A..B")
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--perturb-choi", type=float, default=0.0, metavar="EPS")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo run of the optimal protocol")
    _channel_args(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=default_seed())
    p.add_argument("--input-seed", type=int, help="use a Haar-random pure input drawn from this seed")
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"retrosim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, NumericError) as exc:
        bracket = getattr(exc, "bracket", None)
        extra = f" (bracket {bracket})" if bracket else ""
        print(f"retrosim: numerical failure: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ContractViolation, CapacityError, RetroError, ValueError, OSError) as exc:
        print(f"retrosim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
