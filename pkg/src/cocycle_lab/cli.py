"""Command-line front end.

Every subcommand echoes its resolved configuration next to the result: JSON
output has a ``config`` key, CSV output a leading ``# config:`` line. The
worker count only changes speed, never output, so it is not echoed.

Exit codes: 0 success, 1 numerical gate failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .cocycle import (
    ConstructionParams,
    build_base,
    build_difference,
    build_perturbed,
    fiber_bunching_test,
    holder_bound,
    holder_bound_decays,
    holder_norm,
    identity_cocycle,
)
from .exceptions import CapacityError, CocycleLabError
from .lyapunov import SWAP_TOL, kac_check, mc_exponent, verify_swap
from .regions import ParameterPoint, classify, sweep, write_csv

EXIT_OK, EXIT_GATE, EXIT_USAGE = 0, 1, 2
SEED_ENV = "COCYCLE_LAB_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def _perturb_k(text: str) -> int:
    value = text.split("=", 1)[1] if text.startswith("k=") else text
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected k=<int>, got {text!r}")
    if k < 1:
        raise argparse.ArgumentTypeError("k must be positive")
    return k


def _emit(args, payload, text: str | None = None) -> None:
    if text is None:
        text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _config(args) -> dict:
    skip = {"func", "workers", "output"}
    return {key: value for key, value in sorted(vars(args).items()) if key not in skip}


def _params(args, k: int | None = None) -> ConstructionParams:
    return ConstructionParams(args.sigma, args.eta, args.alpha, args.gamma,
                              k if k is not None else args.k)


# -- subcommands --------------------------------------------------------------

def cmd_exponent(args) -> int:
    if args.perturb is not None:
        coc = build_perturbed(_params(args, args.perturb))
    else:
        coc = build_base(args.sigma, args.eta)
    est = mc_exponent(coc, args.p, args.steps, args.trials, args.seed, args.workers)
    result = est.to_dict()
    if est.exact is not None:
        result["within_3_stderr"] = abs(est.lambda_plus - est.exact) <= 3 * est.stderr
    _emit(args, {"command": "exponent", "config": _config(args),
                 "cocycle": coc.to_dict(), "result": result})
    return EXIT_OK


def cmd_holder(args) -> int:
    rows = []
    for k in range(args.k_min, args.k_max + 1):
        params = _params(args, k)
        row = {"k": k, "bound": holder_bound(params), "exact": False,
               "sup": None, "seminorm": None, "norm": None, "within_bound": None}
        if not args.bound_only:
            try:
                norm = holder_norm(build_difference(params), args.alpha)
            except CapacityError:
                pass
            else:
                row.update(norm.to_dict())
                row["within_bound"] = norm.norm <= row["bound"]
        rows.append(row)
    bounds = [r["bound"] for r in rows]
    summary = {
        "bound_decays": holder_bound_decays(_params(args, args.k_min)),
        "bound_decreasing_over_range": all(a > b for a, b in zip(bounds, bounds[1:])),
    }
    exact_norms = [r["norm"] for r in rows if r["exact"]]
    if len(exact_norms) >= 2:
        summary["exact_last_below_first"] = exact_norms[-1] < exact_norms[0]
    if args.format == "csv":
        cols = ["k", "sup", "seminorm", "norm", "bound", "exact", "within_bound"]
        lines = ["# config: " + json.dumps(_config(args), sort_keys=True),
                 "# summary: " + json.dumps(summary, sort_keys=True), ",".join(cols)]
        lines += [",".join("" if r[c] is None else repr(r[c]) for c in cols) for r in rows]
        _emit(args, None, "\n".join(lines) + "\n")
    else:
        _emit(args, {"command": "holder", "config": _config(args),
                     "rows": rows, "summary": summary})
    failed = any(r["within_bound"] is False for r in rows)
    return EXIT_GATE if failed else EXIT_OK


def cmd_verify_swap(args) -> int:
    from .repro import induced_residuals

    params = _params(args)
    report = verify_swap(params, perturb=not args.no_perturb)
    payload = {"command": "verify-swap", "config": _config(args), "words": report.to_dict()}
    passed = report.passed
    if args.returns and not args.no_perturb:
        induced = induced_residuals(args.k, args.p, args.returns, args.seed)
        induced["pass"] = induced["max_antidiag_residual"] <= SWAP_TOL
        payload["returns"] = induced
        passed = passed and induced["pass"]
    payload["pass"] = passed
    _emit(args, payload)
    return EXIT_OK if passed else EXIT_GATE


def cmd_regions(args) -> int:
    if args.sigma is not None and args.eta is not None:
        reports = [classify(ParameterPoint(args.sigma, args.eta, args.alpha, args.p))]
    else:
        grid = (args.grid_sigma or args.grid, args.grid_eta or args.grid)
        reports = sweep(args.alpha, args.p, (args.sigma_min, args.sigma_max),
                        (args.eta_min, args.eta_max), grid, args.sigma_over_eta)
    if args.format == "json":
        payload = {"command": "regions", "config": _config(args),
                   "points": [r.to_dict() for r in reports]}
        _emit(args, payload)
    else:
        _emit(args, None, write_csv(reports, comment=_config(args)))
    return EXIT_OK


def cmd_kac(args) -> int:
    rep = kac_check(args.k, args.p, args.count, args.seed, args.horizon)
    _emit(args, {"command": "kac", "config": _config(args), "result": rep.to_dict()})
    return EXIT_OK


def cmd_bunching(args) -> int:
    if args.cocycle == "identity":
        coc = identity_cocycle()
    elif args.cocycle == "perturbed":
        coc = build_perturbed(_params(args))
    else:
        coc = build_base(args.sigma, args.eta)
    res = fiber_bunching_test(coc, args.alpha, args.n_max)
    _emit(args, {"command": "bunching", "config": _config(args),
                 "cocycle": coc.to_dict(), "result": res.to_dict()})
    return EXIT_OK


def cmd_repro(args) -> int:
    from .repro import run_all

    only = set(args.only) if args.only else None
    results = run_all(only)
    for r in results:
        print(r.line(), file=sys.stderr)
    passed = all(r.passed for r in results)
    _emit(args, {"command": "repro", "config": _config(args), "pass": passed,
                 "criteria": [r.to_dict() for r in results]})
    return EXIT_OK if passed else EXIT_GATE


# -- parser -------------------------------------------------------------------

def _common(format_default: str = "json") -> argparse.ArgumentParser:
    # A fresh parent per subcommand: argparse shares parent actions, so a
    # per-subcommand default would otherwise leak into every subcommand.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_default_seed(),
                        help=f"base seed (default 0, or ${SEED_ENV})")
    common.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: machine parallelism)")
    common.add_argument("--format", choices=("json", "csv"), default=format_default)
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    return common


def build_parser() -> argparse.ArgumentParser:
    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--sigma", type=float, default=4.0)
    model.add_argument("--eta", type=float, default=2.0)
    model.add_argument("--alpha", type=float, default=0.4)
    model.add_argument("--gamma", type=float, default=4 / 3)
    model.add_argument("--k", type=int, default=2)

    parser = argparse.ArgumentParser(
        prog="cocycle-lab",
        description="Lyapunov exponents and Hölder perturbations of SL(2) cocycles "
                    "over the Bernoulli shift.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponent", parents=[_common(), model],
                       help="Monte Carlo top exponent of the base or perturbed cocycle")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--perturb", type=_perturb_k, default=None, metavar="k=K",
                   help="use the perturbed cocycle with this k")
    p.add_argument("--steps", type=int, default=100000)
    p.add_argument("--trials", type=int, default=64)
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("holder", parents=[_common(), model],
                       help="exact Hölder distance to the perturbation vs the analytic bound")
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--bound-only", action="store_true")
    p.set_defaults(func=cmd_holder)

    p = sub.add_parser("verify-swap", parents=[_common(), model],
                       help="check that B_n^n swaps the horizontal and vertical directions")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--no-perturb", action="store_true",
                   help="control run with the unperturbed cocycle (expected to fail)")
    p.add_argument("--returns", type=int, default=0,
                   help="also check this many sampled first-return matrices")
    p.set_defaults(func=cmd_verify_swap)

    p = sub.add_parser("regions", parents=[_common("csv")],
                       help="classify parameters into continuity/discontinuity regions")
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=None, help="single point mode")
    p.add_argument("--eta", type=float, default=None, help="single point mode")
    p.add_argument("--sigma-min", type=float, default=1.01)
    p.add_argument("--sigma-max", type=float, default=4.0)
    p.add_argument("--eta-min", type=float, default=1.01)
    p.add_argument("--eta-max", type=float, default=4.0)
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--grid-sigma", type=int, default=None)
    p.add_argument("--grid-eta", type=int, default=None)
    p.add_argument("--sigma-over-eta", type=float, default=None,
                   help="1-D sweep in eta with sigma = ratio * eta")
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("kac", parents=[_common()], help="mean first-return time to Z_n")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--count", type=int, default=100000)
    p.add_argument("--horizon", type=int, default=10**6)
    p.set_defaults(func=cmd_kac)

    p = sub.add_parser("bunching", parents=[_common(), model], help="fiber-bunching search")
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--cocycle", choices=("base", "perturbed", "identity"), default="base")
    p.set_defaults(func=cmd_bunching)

    p = sub.add_parser("repro", parents=[_common()], help="run every acceptance check")
    p.add_argument("--only", type=int, nargs="*", default=None, metavar="N")
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be positive")
    try:
        return args.func(args)
    except CocycleLabError as exc:
        print(f"cocycle-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        # Reader went away (e.g. piped into head); silence the flush at exit.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
