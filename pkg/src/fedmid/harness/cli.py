"""Command-line interface: run, sweep, diagnose, list-aggregators."""

import argparse
import logging
import sys
from pathlib import Path

import yaml

from ..aggregators import registered_names
from .config import ConfigError, ExperimentConfig
from .diagnostics import diagnose_divergence
from .metrics import write_json
from .runner import resolve_out_dir, run_experiment


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fedmid", description="Federated poisoning-defense simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("--config", required=True, help="flat key/value YAML config")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seeds", type=int, default=1, help="replicate over k consecutive seeds")

    sweep = sub.add_parser("sweep", help="run the config once per value of one key")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--axis", required=True, help="config key to vary")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--out", default=None)

    diag = sub.add_parser("diagnose", help="parameter vs relational divergence report")
    diag.add_argument("--config", required=True)
    diag.add_argument("--epochs", type=int, default=10)
    diag.add_argument("--out", default=None)

    sub.add_parser("list-aggregators", help="print registered aggregation rules")
    return parser


def _load_config(path, out=None):
    cfg = ExperimentConfig.from_file(path)
    if out is not None:
        cfg.out = out
    return cfg


def cmd_run(args):
    cfg = _load_config(args.config, args.out)
    base_out = resolve_out_dir(cfg)
    if args.seeds <= 1:
        _, summary = run_experiment(cfg, base_out)
        print(f"wrote {base_out} acc={summary['acc_mean']} asr={summary['asr_mean']}")
        return 0
    summaries = []
    for k in range(args.seeds):
        seed_cfg = ExperimentConfig.from_dict(
            {**cfg.to_dict(), "master_seed": cfg.master_seed + k}
        )
        _, summary = run_experiment(seed_cfg, base_out / f"seed_{seed_cfg.master_seed}")
        summaries.append({"master_seed": seed_cfg.master_seed, **summary})
    write_json(base_out / "seeds.json", summaries)
    print(f"wrote {base_out} ({args.seeds} seeds)")
    return 0


def cmd_sweep(args):
    cfg = _load_config(args.config, args.out)
    values = [yaml.safe_load(v) for v in args.values.split(",")]
    base_out = resolve_out_dir(cfg)
    index = []
    for value in values:
        point = ExperimentConfig.from_dict({**cfg.to_dict(), args.axis: value})
        sub_dir = base_out / f"{args.axis}={value}"
        _, summary = run_experiment(point, sub_dir)
        index.append({args.axis: value, "dir": str(sub_dir), **summary})
    write_json(base_out / "sweep.json", index)
    print(f"wrote {base_out} ({len(values)} runs along {args.axis})")
    return 0


def cmd_diagnose(args):
    cfg = _load_config(args.config, args.out)
    report = diagnose_divergence(cfg, epochs=args.epochs)
    out_dir = Path(cfg.out) if cfg.out else resolve_out_dir(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(out_dir / "diagnostics.json", report)
    header = f"{'epoch':>5} {'param_rel':>10} {'relational_rel':>15} {'param_ratio':>12} {'rel_ratio':>10}"
    print(header)
    for i, epoch in enumerate(report["epochs"]):
        print(
            f"{epoch:>5} {report['param_relative'][i]:>10.4f} "
            f"{report['relational_relative'][i]:>15.4f} "
            f"{report['param_ratio'][i]:>12.4f} {report['relational_ratio'][i]:>10.4f}"
        )
    print(f"wrote {out_dir / 'diagnostics.json'}")
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "diagnose":
            return cmd_diagnose(args)
        if args.command == "list-aggregators":
            print("\n".join(registered_names()))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
