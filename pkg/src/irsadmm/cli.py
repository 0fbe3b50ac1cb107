"""Command-line entry point: ``irsadmm {run,trace,sweep,validate}``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, kernels
from .baselines import solve_centralized
from .consensus import run_decentralized
from .harness import ExperimentConfig, aggregate, drop_seed, load_config, run_experiment
from .model import generate_scenario
from .validation import run_all


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "drops", None) is not None:
        cfg = replace(cfg, drops=args.drops)
    return cfg


def _outdir(args, cfg, default):
    return args.out or cfg.out or default


def cmd_run(args, per_method=False):
    cfg = _load(args)
    out = _outdir(args, cfg, "out")
    rows = run_experiment(cfg, out=out, per_method=per_method)
    for a in aggregate(rows):
        v = a["value"] if a["value2"] is None else f"{a['value']},{a['value2']}"
        print(f"{a['method']:<24} {cfg.sweep}={v:<10} mean {a['mean_sum_rate']:.4f} "
              f"+- {a['stderr_sum_rate']:.4f} bits  rounds {a['mean_rounds']:.1f}")
    print(f"wrote {len(rows)} rows to {Path(out) / 'results.csv'}")
    return 0


def cmd_trace(args):
    cfg = _load(args)
    out = Path(_outdir(args, cfg, "out"))
    out.mkdir(parents=True, exist_ok=True)
    scfg = cfg.scenario_for(cfg.values[0], cfg.values2[0] if cfg.sweep2 else None)
    seed = drop_seed(cfg.seed, 0)
    sc, ch = generate_scenario(scfg, seed)
    _, td = run_decentralized(sc, ch, cfg.admm)
    _, tc = solve_centralized(sc, ch, cfg.admm)
    td.to_csv(out / "trace_decentralized.csv")
    tc.to_csv(out / "trace_centralized.csv")
    print(f"decentralized: {td.final_rate:.4f} bits after {td.rounds} rounds "
          f"({len(td)} visits, {td.cum_symbols[-1] if len(td) else 0} backhaul symbols)")
    print(f"centralized:   {tc.final_rate:.4f} bits after {tc.rounds} rounds")
    print(f"traces written to {out}")
    return 0


def cmd_validate(args):
    seed = args.seed or 0
    results = run_all(seed)
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    print(f"backend: {kernels.BACKEND}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser():
    p = argparse.ArgumentParser(prog="irsadmm", description="Decentralized IRS-aided beamforming simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, drops=True):
        sp.add_argument("--config", help="YAML experiment file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output directory (default: config 'out' or ./out)")
        if drops:
            sp.add_argument("--drops", type=int, help="Monte-Carlo drops (overrides the config)")

    common(sub.add_parser("run", help="run an experiment from a config file"))
    common(sub.add_parser("sweep", help="run a sweep and write one aggregate CSV per method"))
    common(sub.add_parser("trace", help="convergence traces on a single drop"), drops=False)
    v = sub.add_parser("validate", help="quick oracle checks on small instances")
    v.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_run(args, per_method=True)
        if args.command == "trace":
            return cmd_trace(args)
        return cmd_validate(args)
    except (ValueError, OSError) as exc:
        print(f"irsadmm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
