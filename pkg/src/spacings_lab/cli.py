"""Command line front end: ``spacings-lab <command> [options]``.

Exit status is 0 on success, 1 on configuration errors and 2 on runtime
errors; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import ConfigError, SpacingsLabError
from .harness import ExperimentConfig, _clean, run_experiment
from .rng import RngStream
from .spacings import sample_exponential_spacings

COMMANDS = {
    "gc": "gc_curve",
    "covcheck": "cov_check",
    "rates": "rate_slopes",
    "oscillation": "oscillation_ratio",
    "lil": "lil_check",
    "constants": "constants_audit",
}

DEFAULTS = {
    "gc_curve": {"k_schedule": {"fixed": 2}, "N_list": [10**3, 10**4, 10**5], "reps": 50},
    "cov_check": {"k_schedule": {"fixed": 1}, "N_list": [500], "reps": 5000},
    "rate_slopes": {"k_schedule": {"fixed": 1}, "N_list": [2**e for e in range(10, 19)], "reps": 100},
    "oscillation_ratio": {"k_schedule": {"fixed": 1}, "N_list": [10**5], "reps": 50},
    "lil_check": {"k_schedule": {"fixed": 1}, "N_list": [10**5], "reps": 200},
    "constants_audit": {"N_list": [], "reps": 1, "k_list": list(range(1, 1001))},
}
DEFAULT_SEED = 1991


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spacings-lab", description="Monte Carlo experiments on uniform k-spacings.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("simulate", *COMMANDS):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with ExperimentConfig fields")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "simulate":
            p.add_argument("--N", type=int, default=1000, help="number of spacings")
            p.add_argument("--k", type=int, default=1, help="spacing step")
    return parser


def _config(args, experiment) -> ExperimentConfig:
    data = {"experiment": experiment, "seed": DEFAULT_SEED, "output_path": "results", **DEFAULTS[experiment]}
    if args.config:
        loaded = ExperimentConfig.from_json(args.config)
        if loaded.experiment != experiment:
            raise ConfigError("experiment", f"config is for {loaded.experiment!r}, command runs {experiment!r}")
        data = {name: getattr(loaded, name) for name in ExperimentConfig.__dataclass_fields__}
        data["thresholds"] = dict(loaded.thresholds)
    for flag, name in (("seed", "seed"), ("reps", "reps"), ("out", "output_path")):
        value = getattr(args, flag)
        if value is not None:
            data[name] = value
    return ExperimentConfig(**data)


def _simulate(args) -> dict:
    if args.N is None or args.N < 1:
        raise ConfigError("N", "must be a positive integer")
    seed = DEFAULT_SEED if args.seed is None else args.seed
    out = args.out or "results"
    try:
        sample = sample_exponential_spacings(RngStream(seed, 0), args.N, args.k)
    except ValueError as exc:
        raise ConfigError("simulate", str(exc)) from None
    os.makedirs(out, exist_ok=True)
    meta = {"schema": "v1", "seed": seed, "N": sample.N, "k": sample.k, "n": sample.n,
            "s_total": sample.s_total, "mu": sample.mu}
    if args.format == "csv":
        path = os.path.join(out, "sample.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("# schema=v1\n# config=" + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
            fh.write("i,scaled_spacing,block_sum\n")
            for i, (s, y) in enumerate(zip(sample.scaled, sample.y)):
                fh.write(f"{i},{float(s)!r},{float(y)!r}\n")
    else:
        path = os.path.join(out, "sample.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_clean({**meta, "scaled": np.asarray(sample.scaled).tolist(),
                              "block_sums": np.asarray(sample.y).tolist()}), fh, indent=1, sort_keys=True)
            fh.write("\n")
    return {"records": path}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("threads", "must be >= 1")
        if args.command == "simulate":
            files = _simulate(args)
        else:
            cfg = _config(args, COMMANDS[args.command])
            files = run_experiment(cfg, threads=args.threads, fmt=args.format).files
    except ConfigError as exc:
        print(f"spacings-lab: configuration error: {exc}", file=sys.stderr)
        return 1
    except (SpacingsLabError, OSError, ValueError) as exc:
        print(f"spacings-lab: error: {exc}", file=sys.stderr)
        return 2
    for kind, path in files.items():
        print(f"{kind}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
