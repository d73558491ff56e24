"""Command-line entry point.

Subcommands map onto experiment modes; every run needs a config file except
enumerate-example. --seed/--replicates/--workers/--out override the config,
and the environment variables AUXTRIAL_SEED and AUXTRIAL_WORKERS override
seed and worker count only. Exit codes: 0 success, 2 configuration error,
3 partial failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ExperimentConfig, config_from_dict, load_config
from .errors import ConfigError
from .runner import run_experiment

SUBCOMMANDS = {
    "simulate": ("multitest-sim", "groupseq-sim", "retro-sim"),
    "optimize": ("optimize",),
    "calibrate": ("calibrate",),
    "boundaries": ("boundaries",),
    "prior-report": ("prior-report",),
    "enumerate-example": ("enumerate-example",),
    "retro": ("retro-sim",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="auxtrial",
                                     description="Trial decision-rule simulation engine")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML experiment configuration",
                       required=name != "enumerate-example")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None)
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> None:
    env_seed = os.environ.get("AUXTRIAL_SEED")
    env_workers = os.environ.get("AUXTRIAL_WORKERS")
    if env_seed is not None:
        cfg.seed = int(env_seed)
    if env_workers is not None:
        cfg.workers = int(env_workers)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.replicates is not None:
        cfg.replicates = args.replicates
    if args.out is not None:
        cfg.out = args.out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "enumerate-example" and args.config is None:
            cfg = config_from_dict({"mode": "enumerate-example", "seed": 0})
        else:
            cfg = load_config(args.config)
        if cfg.mode not in SUBCOMMANDS[args.command]:
            raise ConfigError("mode", f"config mode {cfg.mode!r} does not match "
                                      f"subcommand {args.command!r}")
        _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    manifest = run_experiment(cfg)
    for path in manifest.outputs:
        print(path)
    if manifest.failures:
        print(f"{len(manifest.failures)} cell(s) failed; see manifest", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
