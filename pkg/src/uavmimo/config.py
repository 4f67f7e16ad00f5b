"""Experiment configuration: typed parameter blocks backed by an INI file.

Every block is a frozen dataclass whose defaults reproduce the reference
urban-macro setup (37 sites, 500 m ISD, 2 GHz, 10 MHz / 50 PRBs, 46 dBm BSs,
8x1 and 8x8 X-POL panels at 25 m with 12 degree downtilt).
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple

from .antenna import ArrayConfig
from .channel import ChannelParams
from .mu_mimo import UplinkPowerConfig

log = logging.getLogger(__name__)

MODES = ("su", "mu")
CSI_MODES = ("perfect", "r3pc", "r3ep")


class ConfigError(ValueError):
    """Invalid configuration value; the message names the offending field."""


@dataclass(frozen=True)
class DeploymentParams:
    isd: float = 500.0
    tiers: int = 3
    bs_height: float = 25.0
    sector_azimuths: Tuple[float, ...] = (0.0, 120.0, 240.0)
    users_per_sector: float = 15.0
    uav_ratio: float = 0.071
    indoor_fraction: float = 0.8
    gue_height: float = 1.5
    floor_height: float = 3.0
    min_floors: int = 4
    max_floors: int = 8
    uav_min_height: float = 1.5
    uav_max_height: float = 300.0
    min_distance: float = 35.0


@dataclass(frozen=True)
class AntennaParams:
    element_max_gain: float = 8.0
    hpbw_az: float = 65.0
    hpbw_el: float = 65.0
    max_attenuation: float = 30.0
    downtilt: float = 12.0
    element_spacing: float = 0.5
    su_rows: int = 8
    su_cols: int = 1
    mu_rows: int = 8
    mu_cols: int = 8
    cross_polarized: bool = True

    def array(self, mode: str) -> ArrayConfig:
        rows, cols = (self.su_rows, self.su_cols) if mode == "su" else (self.mu_rows, self.mu_cols)
        return ArrayConfig(rows=rows, cols=cols, cross_polarized=self.cross_polarized,
                           element_spacing=self.element_spacing, mechanical_downtilt=self.downtilt,
                           element_max_gain=self.element_max_gain, hpbw_az=self.hpbw_az,
                           hpbw_el=self.hpbw_el, max_attenuation=self.max_attenuation)


@dataclass(frozen=True)
class RadioParams:
    bs_power_dbm: float = 46.0
    n_prbs: int = 50
    prb_bandwidth: float = 180e3
    noise_density_dbm_hz: float = -174.0
    nf_bs_db: float = 7.0
    nf_ue_db: float = 9.0
    overhead_symbols: int = 3
    symbols_per_slot: int = 14
    target_rate: float = 100e3


@dataclass(frozen=True)
class MacParams:
    k_max_su: int = 1
    k_max_mu: int = 8
    shuffle: bool = False


@dataclass(frozen=True)
class UplinkParams:
    p_max: float = 23.0
    p0: float = -58.0
    alpha: float = 0.5
    cond_threshold: float = 1e8

    def power_config(self) -> UplinkPowerConfig:
        return UplinkPowerConfig(p_max=self.p_max, p0=self.p0, alpha=self.alpha)


@dataclass(frozen=True)
class PhyParams:
    mcs_table: str = ""  # empty: the packaged table


@dataclass(frozen=True)
class ExperimentParams:
    mode: str = "su"
    csi: str = "perfect"
    uav_height: Optional[float] = None  # None: uniform over [uav_min_height, uav_max_height]
    drops: int = 500
    master_seed: int = 1
    workers: int = 1
    uav_height_bins: Tuple[float, ...] = (1.5, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentParams = field(default_factory=ExperimentParams)
    deployment: DeploymentParams = field(default_factory=DeploymentParams)
    antenna: AntennaParams = field(default_factory=AntennaParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    radio: RadioParams = field(default_factory=RadioParams)
    mac: MacParams = field(default_factory=MacParams)
    uplink: UplinkParams = field(default_factory=UplinkParams)
    phy: PhyParams = field(default_factory=PhyParams)

    # convenience accessors
    @property
    def mode(self) -> str:
        return self.experiment.mode

    @property
    def csi(self) -> str:
        return self.experiment.csi

    def with_(self, **blocks) -> "ExperimentConfig":
        """Copy with fields replaced, e.g. ``cfg.with_(experiment={"mode": "mu"})``."""
        new = {}
        for name, changes in blocks.items():
            new[name] = dataclasses.replace(getattr(self, name), **changes)
        out = dataclasses.replace(self, **new)
        validate(out)
        return out


SECTIONS = [f.name for f in fields(ExperimentConfig)]


def _format(value) -> str:
    if value is None:
        return "uniform"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(section: str, name: str, raw: str, default):
    where = f"[{section}] {name}"
    raw = raw.strip()
    try:
        if section == "experiment" and name == "uav_height":
            return None if raw.lower() in ("uniform", "") else float(raw)
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw, 0)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {type(default).__name__}") from None


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    e, d, r = cfg.experiment, cfg.deployment, cfg.radio
    checks = [
        (e.mode in MODES, "[experiment] mode", f"must be one of {MODES}"),
        (e.csi in CSI_MODES, "[experiment] csi", f"must be one of {CSI_MODES}"),
        (e.drops >= 1, "[experiment] drops", "must be >= 1"),
        (e.workers >= 1, "[experiment] workers", "must be >= 1"),
        (0 <= e.master_seed < 2 ** 64, "[experiment] master_seed", "must be a 64-bit unsigned integer"),
        (e.uav_height is None or d.uav_min_height <= e.uav_height <= d.uav_max_height,
         "[experiment] uav_height", f"must lie in [{d.uav_min_height}, {d.uav_max_height}]"),
        (len(e.uav_height_bins) >= 2 and all(a < b for a, b in zip(e.uav_height_bins, e.uav_height_bins[1:])),
         "[experiment] uav_height_bins", "needs at least two strictly increasing edges"),
        (d.isd > 0, "[deployment] isd", "must be positive"),
        (d.tiers in (1, 2, 3), "[deployment] tiers", "must be 1, 2 or 3"),
        (d.users_per_sector > 0, "[deployment] users_per_sector", "must be positive"),
        (0 <= d.uav_ratio <= 1, "[deployment] uav_ratio", "must lie in [0, 1]"),
        (0 <= d.indoor_fraction <= 1, "[deployment] indoor_fraction", "must lie in [0, 1]"),
        (1 <= d.min_floors <= d.max_floors, "[deployment] min_floors", "must satisfy 1 <= min_floors <= max_floors"),
        (d.uav_min_height <= d.uav_max_height, "[deployment] uav_min_height", "must not exceed uav_max_height"),
        (r.n_prbs >= 1, "[radio] n_prbs", "must be >= 1"),
        (0 <= r.overhead_symbols < r.symbols_per_slot, "[radio] overhead_symbols",
         "must lie in [0, symbols_per_slot)"),
        (cfg.mac.k_max_su >= 1 and cfg.mac.k_max_mu >= 1, "[mac] k_max_su/k_max_mu", "must be >= 1"),
        (0 <= cfg.uplink.alpha <= 1, "[uplink] alpha", "must lie in [0, 1]"),
        (cfg.uplink.p0 <= cfg.uplink.p_max, "[uplink] p0", "must not exceed p_max"),
        (cfg.antenna.element_spacing > 0, "[antenna] element_spacing", "must be positive"),
    ]
    for ok, where, msg in checks:
        if not ok:
            raise ConfigError(f"{where}: {msg}")
    return cfg


def from_string(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    blocks = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"[{section}]: unknown section")
    for f in fields(ExperimentConfig):
        default_block = f.default_factory()
        vals = {}
        if parser.has_section(f.name):
            known = {bf.name: getattr(default_block, bf.name) for bf in fields(default_block)}
            for key, raw in parser.items(f.name):
                if key not in known:
                    raise ConfigError(f"[{f.name}] {key}: unknown key")
                vals[key] = _parse(f.name, key, raw, known[key])
        try:
            blocks[f.name] = dataclasses.replace(default_block, **vals)
        except ValueError as exc:
            raise ConfigError(f"[{f.name}]: {exc}") from None
    return validate(ExperimentConfig(**blocks))


def to_string(cfg: ExperimentConfig) -> str:
    out = io.StringIO()
    for f in fields(ExperimentConfig):
        block = getattr(cfg, f.name)
        out.write(f"[{f.name}]\n")
        for bf in fields(block):
            out.write(f"{bf.name} = {_format(getattr(block, bf.name))}\n")
        out.write("\n")
    return out.getvalue()


def load(path: str | Path) -> ExperimentConfig:
    return from_string(Path(path).read_text())


def save(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(to_string(cfg))


def effective_csi(cfg: ExperimentConfig) -> Optional[str]:
    """CSI regime in force; single-user mode always uses perfect CSI."""
    if cfg.mode == "su":
        if cfg.csi != "perfect":
            log.warning("csi=%s ignored in single-user mode", cfg.csi)
        return None
    return cfg.csi
