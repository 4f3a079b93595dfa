"""``pdeaccel`` command line: ``solve``, ``bench`` and ``table``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import kernels
from .experiments import PAPER_TABLES, ConfigError, format_rows, load_config, run_experiment, table_configs, with_overrides


def _load(args):
    cfg = load_config(args.config)
    seeds = [args.seed] if args.seed is not None else None
    return with_overrides(cfg, out=args.out, seed=seeds)


def cmd_solve(args) -> int:
    cfg = _load(args)
    cfg = with_overrides(cfg, mesh=cfg.mesh[:1], seed=cfg.seed[:1])
    res = run_experiment(cfg, jobs=1)
    print(format_rows(res))
    return 0 if res.all_converged else 1


def cmd_bench(args) -> int:
    cfg = _load(args)
    res = run_experiment(cfg, jobs=args.jobs)
    print(f"backend: {kernels.BACKEND}")
    print(format_rows(res))
    return 0 if res.all_converged else 1


def cmd_table(args) -> int:
    ok = True
    out = args.out or "runs"
    seeds = [args.seed] if args.seed is not None else list(range(args.seeds))
    for cfg, paper in table_configs(args.name, args.mesh, seeds, out):
        res = run_experiment(cfg, jobs=args.jobs, artifacts=False)
        ok &= res.all_converged
        print(format_rows(res))
        for r in res.rows:
            ref = paper.get(r["mesh"])
            dev = (r["iterations"] - ref) / ref * 100 if ref else float("nan")
            print(f"  mesh {r['mesh']} seed {r['seed']}: {r['iterations']} vs reference {ref} ({dev:+.1f}%)")
        print()
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdeaccel", description="Damped-wave acceleration for convex variational problems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_config=True):
        if need_config:
            sp.add_argument("--config", required=True, type=Path, help="key = value experiment file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="single seed (overrides the config)")
        sp.add_argument("--jobs", type=int, default=1, help="concurrent solves")

    common(sub.add_parser("solve", help="solve the first (mesh, seed) of a config"))
    common(sub.add_parser("bench", help="run the full mesh x seed matrix of a config"))
    t = sub.add_parser("table", help="rerun a reference iteration-count table")
    t.add_argument("name", choices=sorted(PAPER_TABLES))
    t.add_argument("--mesh", type=int, nargs="+", default=[64, 128])
    t.add_argument("--seeds", type=int, default=1, help="number of seeds 0..N-1 (homogenization)")
    common(t, need_config=False)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "bench": cmd_bench, "table": cmd_table}[args.command]
    try:
        return handler(args)
    except (ConfigError, OSError) as exc:
        print(f"pdeaccel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
