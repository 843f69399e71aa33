"""Command-line entry point: ``tavi run|compare|verify``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigInvalid, MismatchedProblem, NonFinite, StepTooLarge, TaviError
from .harness import parse_config, parse_config_list, run_trajectory, compare_runs, trace_to_csv, write_trace

EXIT_OK = 0
EXIT_RUN = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc


def cmd_run(args) -> int:
    cfg = parse_config(_read(args.config))
    trace = run_trajectory(cfg)
    out = args.out or cfg.output_path
    if out:
        write_trace(trace, out, args.format)
        status = "reached tolerance" if trace.terminated else "hit max_iters"
        print(f"{cfg.label}: {trace.iterations} iterations, {status}, final f_err {trace.final_f_err:.6e} -> {out}")
    else:
        sys.stdout.write(trace_to_csv(trace))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfgs = parse_config_list(_read(args.config))
    report = compare_runs(cfgs)
    for cfg, trace in zip(cfgs, report.traces):
        if cfg.output_path:
            write_trace(trace, cfg.output_path)
    print(report.table())
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite

    results = run_suite(quick=args.quick)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tavi", description="Time-adaptive variational integrators for optimisation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configuration and write its trace")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="trace path; defaults to output_path in the config, else stdout")
    run.add_argument("--format", choices=("csv", "json"), default=None)
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="run several configurations on one problem")
    cmp_.add_argument("--config", required=True)
    cmp_.set_defaults(func=cmd_compare)

    ver = sub.add_parser("verify", help="run the residual and property checks")
    ver.add_argument("--quick", action="store_true")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, MismatchedProblem) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepTooLarge, NonFinite) as exc:
        where = f" at iteration {exc.iteration}" if exc.iteration is not None else ""
        print(f"run error{where}: {exc}", file=sys.stderr)
        return EXIT_RUN
    except (TaviError, OSError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
