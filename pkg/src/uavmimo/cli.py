"""Command-line entry point: ``uavmimo simulate | antenna-sweep | assoc-map``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from . import config as cfgmod
from . import harness


def _load(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()
    exp, dep = {}, {}
    if getattr(args, "seed", None) is not None:
        exp["master_seed"] = args.seed
    if getattr(args, "drops", None) is not None:
        exp["drops"] = args.drops
    if getattr(args, "workers", None) is not None:
        exp["workers"] = args.workers
    if getattr(args, "mode", None):
        exp["mode"] = args.mode
    if getattr(args, "csi", None):
        exp["csi"] = args.csi
    h = getattr(args, "uav_height", None)
    if h is not None:
        if h in ("uniform", "range"):
            exp["uav_height"] = None
        elif ":" in h:
            lo, hi = h.split(":", 1)
            exp["uav_height"] = None
            dep["uav_min_height"], dep["uav_max_height"] = float(lo), float(hi)
        else:
            exp["uav_height"] = float(h)
    return cfg.with_(experiment=exp, deployment=dep)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    t0 = time.time()
    n = cfg.experiment.drops
    step = max(1, n // 10)

    def progress(i):
        if (i + 1) % step == 0 or i + 1 == n:
            logging.info("drop %d/%d (%.0f s)", i + 1, n, time.time() - t0)

    summary = harness.run_experiment(cfg, progress)
    paths = harness.emit_outputs(summary, args.out)
    sys.stdout.write(harness.format_summary(summary))
    logging.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_antenna_sweep(args) -> int:
    cfg = _load(args)
    rows = harness.antenna_sweep(cfg, args.height, harness.distance_grid(args.max_distance, args.step))
    harness.write_antenna_sweep(rows, args.out)
    return 0


def cmd_assoc_map(args) -> int:
    cfg = _load(args)
    rows = harness.association_map(cfg, args.drop)
    harness.write_association_map(rows, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument("-v", "--verbose", action="store_true", help="log progress")
    p = argparse.ArgumentParser(prog="uavmimo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, run=True):
        sp.add_argument("--config", help="INI config file (defaults when omitted)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--mode", choices=cfgmod.MODES)
        sp.add_argument("--uav-height", help="fixed height in m, 'uniform', or LO:HI")
        if run:
            sp.add_argument("--drops", type=int)
            sp.add_argument("--csi", choices=cfgmod.CSI_MODES)
            sp.add_argument("--workers", type=int)

    s = sub.add_parser("simulate", parents=[base], help="run Monte Carlo drops and write rates/CDF/summary")
    common(s)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("antenna-sweep", parents=[base], help="single-user panel gain against 2D distance")
    a.add_argument("--config")
    a.add_argument("--height", type=float, nargs="+", required=True)
    a.add_argument("--max-distance", type=float, default=1000.0)
    a.add_argument("--step", type=float, default=1.0)
    a.add_argument("--out", required=True, help="CSV file")
    a.set_defaults(func=cmd_antenna_sweep)

    m = sub.add_parser("assoc-map", parents=[base], help="serving BS and 2D distance of every user in one drop")
    common(m, run=False)
    m.add_argument("--drop", type=int, default=0)
    m.add_argument("--out", required=True, help="CSV file")
    m.set_defaults(func=cmd_assoc_map)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (cfgmod.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
