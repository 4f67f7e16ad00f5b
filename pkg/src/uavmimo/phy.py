"""Link abstraction: per-PRB SINR, MCS staircase and user throughput."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np


def lin2db(x):
    return 10.0 * np.log10(x)


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def noise_power_mw(bandwidth_hz: float, noise_figure_db: float, density_dbm_hz: float = -174.0):
    return db2lin(density_dbm_hz + 10 * np.log10(bandwidth_hz) + noise_figure_db)


@dataclass(frozen=True)
class McsTable:
    thresholds_db: np.ndarray
    efficiency: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds_db, dtype=float)
        e = np.asarray(self.efficiency, dtype=float)
        object.__setattr__(self, "thresholds_db", t)
        object.__setattr__(self, "efficiency", e)
        if t.shape != e.shape or t.ndim != 1 or not len(t):
            raise ValueError("MCS table needs matching non-empty columns")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(e) <= 0):
            raise ValueError("MCS table columns must be strictly increasing")

    @classmethod
    def from_text(cls, text: str) -> "McsTable":
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                sinr, se = line.split()
                rows.append((float(sinr), float(se)))
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def load(cls, path: Optional[str | Path] = None) -> "McsTable":
        if path:
            return cls.from_text(Path(path).read_text())
        return cls.from_text(resources.files("uavmimo").joinpath("data/mcs_table.txt").read_text())

    def to_text(self) -> str:
        lines = ["# min_sinr_dB spectral_efficiency_bps_per_hz"]
        lines += [f"{t!r} {e!r}" for t, e in zip(self.thresholds_db.tolist(), self.efficiency.tolist())]
        return "\n".join(lines) + "\n"


_DEFAULT_TABLE: Optional[McsTable] = None


def default_mcs_table() -> McsTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = McsTable.load()
    return _DEFAULT_TABLE


def sinr_to_se(sinr_db, table: Optional[McsTable] = None):
    """Highest efficiency whose threshold does not exceed the SINR; 0 below
    the first threshold."""
    table = table or default_mcs_table()
    idx = np.searchsorted(table.thresholds_db, np.asarray(sinr_db, dtype=float), side="right")
    se = np.concatenate([[0.0], table.efficiency])[idx]
    return se if se.ndim else float(se)


def se_to_rate(se, scheduled_share, prb_bandwidth: float = 180e3, overhead_symbols: int = 3,
               symbols_per_slot: int = 14):
    """Throughput in bit/s, discounting the control-overhead symbols."""
    if not 0 <= overhead_symbols < symbols_per_slot:
        raise ValueError("overhead_symbols must be in [0, symbols_per_slot)")
    return (np.asarray(se) * prb_bandwidth * np.asarray(scheduled_share)
            * (symbols_per_slot - overhead_symbols) / symbols_per_slot)


@dataclass(frozen=True)
class SinrRecord:
    user: int
    prb: int
    signal: float
    intra_interf: float
    inter_interf: float
    noise: float

    @property
    def sinr_linear(self) -> float:
        return self.signal / (self.intra_interf + self.inter_interf + self.noise)

    @property
    def sinr(self) -> float:
        return float(lin2db(self.sinr_linear))


def compute_sinr(h_serving: np.ndarray, W_serving: np.ndarray, k: int,
                 interferers: Iterable[Tuple[np.ndarray, np.ndarray]], noise: float,
                 user: int = 0, prb: int = 0) -> SinrRecord:
    """SINR of the user served by column ``k`` of ``W_serving``.

    Transmit power lives in the precoder norms. ``interferers`` yields
    ``(h, W)`` pairs: the channel from another BS to this user and that
    BS's precoders on the same PRB.
    """
    g = np.abs(np.conj(h_serving) @ W_serving) ** 2
    inter = 0.0
    for h_j, W_j in interferers:
        inter += float(np.sum(np.abs(np.conj(h_j) @ W_j) ** 2))
    return SinrRecord(user=user, prb=prb, signal=float(g[k]),
                      intra_interf=float(np.delete(g, k).sum()), inter_interf=inter, noise=float(noise))
