"""Command-line entry point: ``hetnet-dc`` / ``python -m hetnet_dc``."""
from __future__ import annotations

import argparse
import logging
import sys

from .association import AssociationError
from .engine import (ASSOCIATIONS, ConfigError, ExperimentConfig, format_summary, load_config,
                     run_experiment, with_overrides)
from .metrics import StarvedMTError
from .scheduling import PROCEDURES


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _choice_list(choices):
    def parse(text: str) -> tuple[str, ...]:
        values = tuple(x.strip().lower() for x in text.split(",") if x.strip())
        bad = [v for v in values if v not in choices]
        if bad or not values:
            raise argparse.ArgumentTypeError(
                f"invalid choice {', '.join(bad) or text!r} (choose from {', '.join(choices)})")
        return values
    return parse


def _sync(text: str) -> int | None:
    if text.lower() in ("none", "off", "inf"):
        return None
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hetnet-dc",
        description="Dual-connectivity PF scheduling simulator for two-tier HetNets.",
        argument_default=argparse.SUPPRESS,
    )
    p.add_argument("--config", help="INI config file (defaults are used for missing keys)")
    p.add_argument("--scenario", type=_int_list, help="scenario id(s) 1-4, comma separated")
    p.add_argument("--mts", type=_int_list, help="MT count(s), comma separated")
    p.add_argument("--procedure", type=_choice_list(PROCEDURES), help="scp,dcsp,dcp,acp")
    p.add_argument("--association", type=_choice_list(ASSOCIATIONS), help="best,uigo,bigu,sm")
    p.add_argument("--slots", type=int)
    p.add_argument("--reps", type=int, help="replications per grid point")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--sync-period", type=_sync, help="PF-DC sync period T in slots ('none' disables)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--h1", type=float)
    p.add_argument("--h2", type=float)
    p.add_argument("--macros", type=int, help="number of macro sites (1-3)")
    p.add_argument("--picos-per-macro", type=int)
    p.add_argument("--out", help="output directory for summary.csv and per_mt.csv")
    p.add_argument("-v", "--verbose", action="store_true", default=False)
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    given = vars(args)
    config = load_config(given["config"]) if "config" in given else ExperimentConfig()
    mapping = {
        "scenario": "scenarios", "mts": "mt_counts", "procedure": "procedures",
        "association": "associations", "slots": "slots", "reps": "replications",
        "seed": "base_seed", "sync_period": "sync_period", "gamma": "gamma", "h1": "h1",
        "h2": "h2", "macros": "num_macros", "picos_per_macro": "picos_per_macro", "out": "output",
    }
    overrides = {dst: given[src] for src, dst in mapping.items() if src in given}
    return with_overrides(config, **overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # bad flags, or --help
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        result = run_experiment(config)
    except (ConfigError, AssociationError, StarvedMTError, ValueError) as exc:
        print(f"hetnet-dc: error: {exc}", file=sys.stderr)
        return 1
    print(format_summary(result))
    print(f"\nwrote {config.output}/summary.csv and {config.output}/per_mt.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
