"""Command line entry point: ``sourceseek simulate | theory | path``."""
from __future__ import annotations

import argparse
import json
import sys

from .complexity import complexity_terms
from .env import GridSpec
from .errors import SourceSeekError
from .harness import expand_config, load_config, run_suite
from .planner import export_path_csv, raster_path


def _grid_arg(text: str) -> GridSpec:
    try:
        r, c = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 16x16, got {text!r}")
    return GridSpec(r, c)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sourceseek", description="Adaptive source seeking simulations")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a suite of seeded trials")
    sim.add_argument("--config", required=True, help="JSON suite config")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--out", default="results")
    sim.add_argument("--parallel", type=int, default=1)

    th = sub.add_parser("theory", help="complexity terms for each experiment point")
    th.add_argument("--config", required=True)
    th.add_argument("--seed", type=int, default=None)
    th.add_argument("--C", type=float, default=8.0, help="constant in the per-cell round bound")

    pa = sub.add_parser("path", help="write the raster path as CSV")
    pa.add_argument("--grid", type=_grid_arg, required=True, metavar="RxC")
    pa.add_argument("--out", default="-")
    return p


def _theory(args) -> int:
    cfg = load_config(args.config)
    tcs = expand_config(cfg, args.seed, 1)
    seen = set()
    reports = []
    tau_0 = cfg.get("tau_0", cfg.get("settings", {}).get("tau_0", 1.0))
    for tc in tcs:
        if tc.point_index in seen:
            continue
        seen.add(tc.point_index)
        env = tc.build_env()
        rep = complexity_terms(env, tau_0, delta_total=tc.delta_total, eps=tc.epsilon, C=args.C)
        d = rep.to_dict()
        d["point"] = tc.point_id
        reports.append(d)
    json.dump(reports, sys.stdout, sort_keys=True, indent=2)
    sys.stdout.write("\n")
    return 0


def _path(args) -> int:
    path = raster_path(args.grid)
    export_path_csv(path, sys.stdout if args.out == "-" else args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            summary = run_suite(load_config(args.config), args.out, args.seed, args.trials, args.parallel)
            print(f"{summary['n_trials']} trials, {summary['aborted']} aborted; results in {args.out}")
            return 0
        if args.command == "theory":
            return _theory(args)
        return _path(args)
    except (SourceSeekError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
