"""Monte Carlo experiment driver and CDF/reliability outputs."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config as cfgmod
from .antenna import gain_vs_distance
from .deployment import UserKind
from .simulation import DropResult, Simulator

log = logging.getLogger(__name__)

QUANTILES = (0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95)
ALL = "all"


def _fmt(x) -> str:
    # repr is the shortest round-tripping form, so files are byte-stable
    return repr(float(x))


def bin_label(lo: float, hi: float) -> str:
    return f"{lo:g}-{hi:g}"


def height_bin_index(heights, edges: Sequence[float]) -> np.ndarray:
    """Bin index per height; bins are [lo, hi) except the last, which is closed.
    Heights outside the edges get -1."""
    edges = np.asarray(edges, dtype=float)
    h = np.asarray(heights, dtype=float)
    idx = np.searchsorted(edges, h, side="right") - 1
    idx = np.where(h == edges[-1], len(edges) - 2, idx)
    return np.where((h < edges[0]) | (h > edges[-1]), -1, idx)


@dataclass
class RateGroup:
    """Rate samples of one user population (kind, height bin)."""

    kind: str
    height_bin: str
    rates: np.ndarray  # sorted ascending
    target_rate: float = 100e3

    def __post_init__(self):
        self.rates = np.sort(np.asarray(self.rates, dtype=float))

    @property
    def count(self) -> int:
        return len(self.rates)

    @property
    def reliability(self) -> float:
        if not self.count:
            return float("nan")
        return float(np.count_nonzero(self.rates >= self.target_rate) / self.count)

    def quantiles(self, qs: Sequence[float] = QUANTILES) -> Dict[float, float]:
        return {q: float(np.quantile(self.rates, q)) for q in qs}

    @property
    def median(self) -> float:
        return float(np.median(self.rates))

    def cdf(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.count
        return self.rates, np.arange(1, n + 1) / n


@dataclass
class CdfSummary:
    config: cfgmod.ExperimentConfig
    drops: List[DropResult]
    groups: Dict[Tuple[str, str], RateGroup] = field(default_factory=dict)

    def group(self, kind: str, height_bin: str = ALL) -> Optional[RateGroup]:
        return self.groups.get((kind, height_bin))

    def reliability(self, kind: str, height_bin: str = ALL) -> float:
        g = self.group(kind, height_bin)
        return g.reliability if g is not None else float("nan")

    def uav_bins(self) -> List[str]:
        return [b for k, b in self.groups if k == "uav" and b != ALL]

    def column(self, name: str) -> np.ndarray:
        return np.concatenate([getattr(d, name) for d in self.drops])


def summarize(cfg: cfgmod.ExperimentConfig, drops: List[DropResult]) -> CdfSummary:
    target = cfg.radio.target_rate
    kinds = np.concatenate([d.kinds for d in drops])
    heights = np.concatenate([d.heights for d in drops])
    rates = np.concatenate([d.rate for d in drops])
    summary = CdfSummary(config=cfg, drops=drops)
    is_uav = kinds == UserKind.UAV
    pops = [("gue", ~is_uav)]
    pops += [(k.label, kinds == k) for k in (UserKind.GUE_OUTDOOR, UserKind.GUE_INDOOR)]
    pops.append(("uav", is_uav))
    for name, mask in pops:
        if mask.any():
            summary.groups[(name, ALL)] = RateGroup(name, ALL, rates[mask], target)
    edges = cfg.experiment.uav_height_bins
    idx = height_bin_index(heights[is_uav], edges)
    for i in range(len(edges) - 1):
        sel = idx == i
        if sel.any():
            label = bin_label(edges[i], edges[i + 1])
            summary.groups[("uav", label)] = RateGroup("uav", label, rates[is_uav][sel], target)
    return summary


_WORKER: Optional[Simulator] = None


def _init_worker(cfg):
    global _WORKER
    _WORKER = Simulator(cfg)


def _run_one(drop_index: int) -> DropResult:
    return _WORKER.run_drop(drop_index)


def run_drops(cfg: cfgmod.ExperimentConfig, progress: Optional[Callable[[int], None]] = None
              ) -> List[DropResult]:
    """All drops of ``cfg`` in drop order, serially or over ``workers``
    processes. Each drop seeds itself from (master_seed, drop index), so the
    result does not depend on the worker count."""
    cfgmod.validate(cfg)
    n, workers = cfg.experiment.drops, cfg.experiment.workers
    out = []
    if workers == 1:
        sim = Simulator(cfg)
        for i in range(n):
            out.append(sim.run_drop(i))
            if progress:
                progress(i)
        return out
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg,)) as pool:
        for i, res in enumerate(pool.map(_run_one, range(n), chunksize=max(1, n // (4 * workers)))):
            out.append(res)
            if progress:
                progress(i)
    return out


def run_experiment(cfg: cfgmod.ExperimentConfig,
                   progress: Optional[Callable[[int], None]] = None) -> CdfSummary:
    return summarize(cfg, run_drops(cfg, progress))


# -- files ---------------------------------------------------------------------

def _kind_label(k) -> str:
    return UserKind(int(k)).label


def write_rates(summary: CdfSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["drop", "user", "kind", "height", "serving_bs", "sinr_db", "rate"])
        for d in summary.drops:
            for u in range(len(d)):
                w.writerow([d.drop, u, _kind_label(d.kinds[u]), _fmt(d.heights[u]), int(d.serving_bs[u]),
                            _fmt(d.sinr_db[u]), _fmt(d.rate[u])])


def write_cdf(summary: CdfSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "height_bin", "rate", "cdf"])
        for (kind, hb), g in summary.groups.items():
            x, p = g.cdf()
            for xi, pi in zip(x, p):
                w.writerow([kind, hb, _fmt(xi), _fmt(pi)])


def format_summary(summary: CdfSummary) -> str:
    cfg = summary.config
    e = cfg.experiment
    lines = [
        f"mode={e.mode} csi={cfgmod.effective_csi(cfg) or 'perfect'} "
        f"uav_height={'uniform' if e.uav_height is None else e.uav_height} "
        f"drops={len(summary.drops)} seed={e.master_seed}",
        f"reliability = P(rate >= {cfg.radio.target_rate:g} bit/s)",
        "",
        f"{'kind':<12} {'height_bin':<10} {'users':>8} {'reliability':>12} {'p5_bps':>12} {'median_bps':>12}",
    ]
    for (kind, hb), g in summary.groups.items():
        q = g.quantiles((0.05, 0.5))
        lines.append(f"{kind:<12} {hb:<10} {g.count:>8d} {g.reliability:>12.4f} "
                     f"{q[0.05]:>12.0f} {q[0.5]:>12.0f}")
    return "\n".join(lines) + "\n"


def write_estimation_error(summary: CdfSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["drop", "user", "kind", "height", "nmse"])
        for d in summary.drops:
            for u in np.flatnonzero(np.isfinite(d.nmse)):
                w.writerow([d.drop, int(u), _kind_label(d.kinds[u]), _fmt(d.heights[u]), _fmt(d.nmse[u])])


def emit_outputs(summary: CdfSummary, out_dir) -> Dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in ("rates.csv", "cdf.csv", "summary.txt", "config.ini")}
    write_rates(summary, paths["rates.csv"])
    write_cdf(summary, paths["cdf.csv"])
    paths["summary.txt"].write_text(format_summary(summary))
    cfgmod.save(summary.config, paths["config.ini"])
    if any(np.isfinite(d.nmse).any() for d in summary.drops):
        paths["estimation_error.csv"] = out / "estimation_error.csv"
        write_estimation_error(summary, paths["estimation_error.csv"])
    return paths


# -- diagnostics ---------------------------------------------------------------------

def distance_grid(max_distance: float = 1000.0, step: float = 1.0) -> np.ndarray:
    return np.arange(step, max_distance + step / 2, step)


def antenna_sweep(cfg: cfgmod.ExperimentConfig, heights: Sequence[float],
                  distances: Optional[np.ndarray] = None) -> List[Tuple[float, float, float]]:
    """Composite (element + array factor) gain of the single-user panel
    against 2D distance, one block per user height."""
    if distances is None:
        distances = distance_grid()
    arr = cfg.antenna.array("su")
    rows = []
    for h in heights:
        g = gain_vs_distance(arr, cfg.deployment.bs_height, h, distances)
        rows += [(float(d), float(h), float(x)) for d, x in zip(distances, g)]
    return rows


def write_antenna_sweep(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["distance", "height", "gain_dB"])
        for d, h, g in rows:
            w.writerow([_fmt(d), _fmt(h), _fmt(g)])


def association_map(cfg: cfgmod.ExperimentConfig, drop_index: int = 0):
    """(user, kind, height, serving_bs, d2d) rows for one drop."""
    sim = Simulator(cfg)
    st = sim.prepare(drop_index)
    serving = st.assoc.serving_bs
    d2d = st.geom.d2d[serving, np.arange(len(serving))]
    u = st.users
    return [(i, _kind_label(u.kinds[i]), float(u.heights[i]), int(serving[i]), float(d2d[i]))
            for i in range(len(serving))]


def write_association_map(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "kind", "height", "serving_bs", "d2d"])
        for i, k, h, b, d in rows:
            w.writerow([i, k, _fmt(h), b, _fmt(d)])
