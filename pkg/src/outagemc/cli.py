"""Command-line front end.

    outagemc estimate SPEC [--seed N] [--workers N] [--out-dir D] [--format csv|json]
    outagemc sweep    SPEC [--seed N] [--workers N] [--out-dir D] [--format csv|json]
    outagemc verify        [--seed N] [--workers N] [--samples N]

Exit codes: 0 success, 1 spec validation error, 2 runtime estimation
failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import (
    SpecError,
    load_spec,
    run_experiment,
    sweep_scv_rows,
    verify_oracles,
    write_csv,
    write_json,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_SPEC = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3


def _common_flags(sub):
    sub.add_argument("--seed", type=int, default=None,
                     help="override the spec's seed")
    sub.add_argument("--workers", type=int, default=1,
                     help="worker processes; results do not depend on this")
    sub.add_argument("--out-dir", type=Path, default=Path("."),
                     help="directory for output files")
    sub.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="csv writes a CSV plus JSON sidecar; json writes JSON only")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="outagemc",
        description="Rare-event Monte Carlo estimation of GSC/MRC outage probability")
    subs = parser.add_subparsers(dest="command", required=True)

    p_est = subs.add_parser("estimate", help="run every (method, sweep point) cell")
    p_est.add_argument("spec", type=Path, help="experiment spec file (INI)")
    _common_flags(p_est)

    p_sweep = subs.add_parser("sweep", help="write plot-ready SCV-vs-axis data")
    p_sweep.add_argument("spec", type=Path, help="experiment spec file (INI)")
    _common_flags(p_sweep)

    p_ver = subs.add_parser("verify", help="run the built-in oracle checks")
    p_ver.add_argument("--seed", type=int, default=20240601)
    p_ver.add_argument("--workers", type=int, default=1)
    p_ver.add_argument("--samples", type=int, default=200_000,
                       help="per-estimator sample count for the checks")
    return parser


def _cmd_estimate(args) -> int:
    spec = load_spec(args.spec)
    rows, sidecar, hard_failure = run_experiment(spec, workers=args.workers,
                                                 seed=args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        csv_path = write_csv(rows, args.out_dir / "results.csv")
        print(f"wrote {csv_path}")
    json_path = write_json(sidecar, args.out_dir / "results.json")
    print(f"wrote {json_path}")
    ok_rows = [r for r in rows if not str(r["warnings"]).startswith("error:")]
    if hard_failure:
        return EXIT_RUNTIME
    if not ok_rows:
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    rows, sidecar, hard_failure = sweep_scv_rows(spec, workers=args.workers,
                                                 seed=args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        csv_path = write_sweep_csv(rows, args.out_dir / "sweep_scv.csv")
        print(f"wrote {csv_path}")
    json_path = write_json(sidecar, args.out_dir / "sweep_scv.json")
    print(f"wrote {json_path}")
    return EXIT_RUNTIME if hard_failure or not rows else EXIT_OK


def _cmd_verify(args) -> int:
    checks = verify_oracles(seed=args.seed, workers=args.workers,
                            samples=args.samples)
    width = max(len(c["check"]) for c in checks)
    failed = 0
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        failed += 0 if c["passed"] else 1
        print(f"{status}  {c['check']:<{width}}  {c['detail']}")
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_verify(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (RuntimeError, ValueError) as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
