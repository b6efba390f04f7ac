"""Command line entry point.

Usage::

    ncapprox <subcommand> --config <file> --seed <u64> --out <path>
             [--trials N] [--plot-script <path>]

Subcommands: field-sweep, similarity-sweep, window-sweep, loss-sweep,
mle-comparison, analysis-tables.  Reruns with identical config and seed
write byte-identical CSV.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig
from .experiments import (
    run_analysis_tables,
    run_field_sweep,
    run_loss_sweep,
    run_mle_comparison,
    run_similarity_sweep,
    run_window_sweep,
    write_plot_script,
    write_result,
)

_RUNNERS = {
    "field-sweep": run_field_sweep,
    "similarity-sweep": run_similarity_sweep,
    "window-sweep": run_window_sweep,
    "loss-sweep": run_loss_sweep,
    "mle-comparison": run_mle_comparison,
    "analysis-tables": run_analysis_tables,
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < (1 << 64):
        raise argparse.ArgumentTypeError(f"seed {text} outside u64 range")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncapprox",
        description="Network-coded correlated-source experiments",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name, help=f"run the {name.replace('-', ' ')}")
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--seed", required=True, type=_u64, help="run seed (u64)")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--trials", type=int, default=None,
                       help="override the configured trial count")
        p.add_argument("--plot-script", default=None,
                       help="also emit a matplotlib script for the CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(
            args.subcommand, args.config, args.seed, args.trials
        )
        result = _RUNNERS[args.subcommand](cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    written = write_result(result, args.out)
    if args.plot_script:
        write_plot_script(result, args.out, args.plot_script)
        written.append(args.plot_script)
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
