"""BS antenna element pattern, planar array steering and the fixed analog beam.

Angles handed to this module are in the *sector frame*: azimuth measured from
the sector boresight in the horizontal plane, elevation from the horizon
(positive up). The mechanical downtilt rotates the whole panel about its
horizontal axis, so patterns and phases are evaluated in the tilted *array
frame*.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 8
    cols: int = 1
    cross_polarized: bool = True
    element_spacing: float = 0.5       # wavelengths
    mechanical_downtilt: float = 12.0  # degrees, positive pointing down
    element_max_gain: float = 8.0      # dBi
    hpbw_az: float = 65.0
    hpbw_el: float = 65.0
    max_attenuation: float = 30.0      # dB

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array needs at least one row and one column")
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")

    @property
    def n_antennas(self) -> int:
        return (2 if self.cross_polarized else 1) * self.rows * self.cols

    @property
    def power_per_port(self) -> float:
        """Fraction of the link power captured by one port (LoS projection of a
        vertically polarised wave on a +-45 degree slant is 1/sqrt(2))."""
        return 0.5 if self.cross_polarized else 1.0

    @classmethod
    def single_user(cls, **kw) -> "ArrayConfig":
        return cls(rows=8, cols=1, **kw)

    @classmethod
    def multi_user(cls, **kw) -> "ArrayConfig":
        return cls(rows=8, cols=8, **kw)


@dataclass(frozen=True)
class SteeringContext:
    azimuth: np.ndarray | float    # degrees from sector boresight
    elevation: np.ndarray | float  # degrees from horizontal, positive up
    wavelength: float = 0.15       # m, 2 GHz


def to_array_frame(azimuth, elevation, downtilt):
    """Rotate sector-frame angles into the frame of a panel tilted down by
    ``downtilt`` degrees. Returns ``(azimuth, elevation)`` in degrees."""
    az = np.radians(azimuth)
    el = np.radians(elevation)
    t = np.radians(downtilt)
    x = np.cos(el) * np.cos(az)
    y = np.cos(el) * np.sin(az)
    z = np.sin(el)
    xl = x * np.cos(t) - z * np.sin(t)
    zl = x * np.sin(t) + z * np.cos(t)
    return np.degrees(np.arctan2(y, xl)), np.degrees(np.arcsin(np.clip(zl, -1.0, 1.0)))


def direction_cosines(cfg: ArrayConfig, ctx: SteeringContext):
    """Array-frame unit direction ``(x, y, z)`` towards the user; ``y`` runs
    along the columns and ``z`` along the rows of the panel."""
    az, el = to_array_frame(ctx.azimuth, ctx.elevation, cfg.mechanical_downtilt)
    az, el = np.radians(az), np.radians(el)
    return np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)


def element_pattern(azimuth, elevation, max_gain=8.0, hpbw_az=65.0, hpbw_el=65.0,
                    max_attenuation=30.0):
    """Parabolic-in-dB element gain (dBi) for angles off the element boresight."""
    az = (np.asarray(azimuth, dtype=float) + 180.0) % 360.0 - 180.0
    att = 12.0 * (az / hpbw_az) ** 2 + 12.0 * (np.asarray(elevation, dtype=float) / hpbw_el) ** 2
    return max_gain - np.minimum(att, max_attenuation)


def element_gain(cfg: ArrayConfig, ctx: SteeringContext):
    az, el = to_array_frame(ctx.azimuth, ctx.elevation, cfg.mechanical_downtilt)
    return element_pattern(az, el, cfg.element_max_gain, cfg.hpbw_az, cfg.hpbw_el,
                            cfg.max_attenuation)


def element_positions(cfg: ArrayConfig) -> np.ndarray:
    """Port phase centres in wavelengths, shape (n_antennas, 2) as (y, z).

    Ports are ordered row-major over (row, col) with the two slants of one
    X-POL pair adjacent; both slants share a phase centre.
    """
    m, n = np.meshgrid(np.arange(cfg.rows), np.arange(cfg.cols), indexing="ij")
    pos = cfg.element_spacing * np.column_stack([n.ravel(), m.ravel()]).astype(float)
    if cfg.cross_polarized:
        pos = np.repeat(pos, 2, axis=0)
    return pos


def steering_vector(cfg: ArrayConfig, ctx: SteeringContext) -> np.ndarray:
    """Unit-modulus array response, shape ``angles.shape + (n_antennas,)``.

    Entry phase is ``2 pi / lambda * (p . u)`` with ``p`` the port position
    and ``u`` the array-frame unit vector towards the user.
    """
    _, y, z = direction_cosines(cfg, ctx)
    pos = element_positions(cfg)
    phase = 2 * np.pi * (np.multiply.outer(y, pos[:, 0]) + np.multiply.outer(z, pos[:, 1]))
    return np.exp(1j * phase)


def array_factor(psi, n: int):
    """``sum_k exp(j k psi)`` for an ``n``-element uniform line array."""
    return np.exp(1j * np.multiply.outer(psi, np.arange(n))).sum(axis=-1)


def array_factor_gain(cfg: ArrayConfig, ctx: SteeringContext):
    """Gain (dB) of the co-phased vertical column: ``|AF|^2 / rows``, i.e. at
    most ``10 log10(rows)`` in the direction the tilted panel faces."""
    if cfg.cols != 1:
        raise ValueError("analog beam is defined for a single vertical column")
    _, _, z = direction_cosines(cfg, ctx)
    af = array_factor(2 * np.pi * cfg.element_spacing * z, cfg.rows)
    return 10 * np.log10(np.maximum(np.abs(af) ** 2 / cfg.rows, 1e-30))


def analog_beam_gain(cfg: ArrayConfig, ctx: SteeringContext):
    """Composite element plus fixed-beam gain (dBi) of the single-user panel."""
    return element_gain(cfg, ctx) + array_factor_gain(cfg, ctx)


def gain_vs_distance(cfg: ArrayConfig, bs_height: float, user_height: float,
                     distances, wavelength: float = 0.15):
    """Composite gain towards a user on the boresight bearing at each 2D
    distance (the sweep behind the single-user lobe analysis)."""
    d = np.asarray(distances, dtype=float)
    el = np.degrees(np.arctan2(user_height - bs_height, d))
    return analog_beam_gain(cfg, SteeringContext(np.zeros_like(d), el, wavelength))
