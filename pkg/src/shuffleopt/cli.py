"""Command-line experiment runner.

    shuffleopt run --config experiment.json [overrides...]

Flag overrides win over the config file; with no config file the documented
defaults apply (synthetic quadratic, nasg, reshuffling, thm1 schedule).
Exit codes: 0 success, 1 hard runtime error, 2 bad usage or config.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import ConfigError, ExperimentConfig, HarnessError, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shuffleopt")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one experiment and write its artifacts")
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--dataset", help="LIBSVM file path (switches dataset kind to libsvm)")
    p.add_argument("--objective", choices=["logistic", "softmax"],
                   help="objective for a libsvm dataset")
    p.add_argument("--optimizer", choices=["nasg", "nasg-pi", "nag", "sgd", "sgdm", "adam"])
    p.add_argument("--scheme", choices=["rr", "ss", "ig"])
    p.add_argument("--schedule", choices=["constant", "thm1", "thm2", "thm3", "init-cond"])
    p.add_argument("--lr", type=float, help="constant step size")
    p.add_argument("--theta", type=float, help="variance-bound constant for thm2")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--seeds", help="comma-separated seed list, e.g. 1,2,3")
    p.add_argument("--grid", help="comma-separated learning-rate grid")
    p.add_argument("--label", help="method label used in artifacts")
    p.add_argument("--out", help="output directory (default: results)")
    return parser


def _load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config is not None:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.dataset is not None:
        ds = raw.get("dataset", {})
        ds = dict(ds) if ds.get("kind") == "libsvm" else {"kind": "libsvm"}
        ds["path"] = args.dataset
        raw["dataset"] = ds
    if args.objective is not None:
        if raw.get("dataset", {}).get("kind") != "libsvm":
            raise ConfigError("--objective only applies to libsvm datasets")
        raw["dataset"]["objective"] = args.objective
    for key in ("optimizer", "scheme", "epochs", "label", "out"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if args.batch_size is not None:
        raw["batch_size"] = args.batch_size
    if args.schedule is not None:
        raw["schedule"] = {"kind": args.schedule}
    if args.lr is not None:
        raw.setdefault("schedule", {"kind": "constant"})["lr"] = args.lr
    if args.theta is not None:
        raw.setdefault("schedule", {"kind": "thm2"})["theta"] = args.theta
    if args.seeds is not None:
        raw["seeds"] = [int(s) for s in args.seeds.split(",") if s]
    if args.grid is not None:
        raw["grid"] = [float(v) for v in args.grid.split(",") if v]
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args)
    except (ConfigError, json.JSONDecodeError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    out = config.out or "results"
    try:
        summary = run_experiment(config, out)
    except (HarnessError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    final = summary.per_seed[0].get("final_value")
    print(f"{summary.label}: {len(summary.per_seed)} run(s), artifacts in {out}")
    if summary.selected_lr is not None:
        print(f"selected lr: {summary.selected_lr!r}")
    if summary.value_mean:
        print(f"mean final value: {summary.value_mean[-1]!r}")
    elif final is not None:
        print(f"final value: {final!r}")
    if summary.degraded:
        print("warning: at least one seed diverged; summary marked degraded",
              file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
