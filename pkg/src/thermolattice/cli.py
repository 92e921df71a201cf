"""Command-line entry point: `thermolattice <kind> --config file.json [...]`.

Exit codes: 0 on success (including no-op runs over empty lists), 2 for any
configuration problem, 3 when a requested model exceeds the dense-matrix
feasibility cap.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import KINDS, ConfigError, RUNNERS, config_from_dict
from .lattice import FeasibilityError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermolattice",
        description="Seeded lattice-model experiments with CSV/JSON artifacts.")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="|".join(KINDS))
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="override the output directory")
        p.add_argument("--workers", type=int, help="process-pool width (default 1)")
        p.add_argument("--samples", type=int,
                       help="override the sample count (e.g. 400 for full runs)")
        p.add_argument("--seed", type=int, help="override the master seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.samples is not None:
        raw["samples"] = args.samples
    if args.seed is not None:
        raw["master_seed"] = args.seed
    try:
        config = config_from_dict(raw, kind=args.kind)
    except ConfigError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    try:
        RUNNERS[config.kind](config)
    except FeasibilityError as exc:
        print(f"infeasible model: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
