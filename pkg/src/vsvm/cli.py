"""Command-line experiment runner.

Exit codes: 0 = ran to completion (a solver failure is a recorded result, not
an error), 1 = usage or configuration error, 2 = internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from . import jsonio
from .experiments import (
    DEFAULT_COMPARE_CELLS,
    ConfigError,
    ExperimentConfig,
    compare,
    render_compare_text,
    render_report_text,
    run_experiment,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rbf-param", type=float, default=1.0,
                        help="RBF width parameter (default 1.0)")
    parser.add_argument("--gamma", type=float, default=1.0,
                        help="smoothness weight in the objective (default 1.0)")
    parser.add_argument("--seed", type=int, default=42,
                        help="seed for the gauss dataset (default 42)")
    parser.add_argument("--v-matrix", default="identity",
                        help="identity or csv:<path> (default identity)")
    parser.add_argument("--report", default=None, help="write the JSON report here")
    parser.add_argument("--regularization", type=float, default=None,
                        help="opt-in diagonal regularization added to the objective matrix "
                             "(off by default; masks the rank-deficiency failure mode)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vsvm",
                     description="Conditional-probability estimation experiments with "
                                 "spectral and feasibility diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", parents=[], help="run one experiment")
    run_p.add_argument("--dataset", default="xor", help="xor, gauss, or csv:<path>")
    run_p.add_argument("--kernel", default="rbf", help="rbf or ink0")
    _add_shared_flags(run_p)

    cmp_p = sub.add_parser("compare", help="run several experiments and tabulate them")
    cmp_p.add_argument("--cell", action="append", default=None, metavar="DATASET:KERNEL",
                       help="repeatable; defaults to the four cells "
                            "{xor,gauss} x {rbf,ink0}")
    _add_shared_flags(cmp_p)
    return parser


def _config_from_args(args, dataset: str, kernel: str) -> ExperimentConfig:
    return ExperimentConfig(
        dataset=dataset,
        kernel=kernel,
        rbf_param=args.rbf_param,
        gamma=args.gamma,
        seed=args.seed,
        v_matrix=args.v_matrix,
        report_path=None,
        regularization=args.regularization,
    )


def _cmd_run(args) -> int:
    config = _config_from_args(args, args.dataset, args.kernel)
    config = ExperimentConfig(**{**config.__dict__, "report_path": args.report})
    report = run_experiment(config)
    print(render_report_text(report))
    if args.report:
        print(f"report written: {args.report}")
    return 0


def _parse_cells(cell_args) -> list[tuple[str, str]]:
    if not cell_args:
        return list(DEFAULT_COMPARE_CELLS)
    cells = []
    for item in cell_args:
        dataset, sep, kernel = item.rpartition(":")
        if not sep or not dataset or not kernel:
            raise ConfigError(f"--cell expects DATASET:KERNEL, got {item!r}")
        cells.append((dataset, kernel))
    return cells


def _cmd_compare(args) -> int:
    cells = _parse_cells(args.cell)
    configs = [_config_from_args(args, dataset, kernel) for dataset, kernel in cells]
    rows = compare(configs)
    print(render_compare_text(rows))
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(jsonio.dumps(rows) + "\n")
        print(f"report written: {args.report}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"vsvm: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"vsvm: error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # internal invariant violation
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
