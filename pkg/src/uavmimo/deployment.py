"""Hexagonal site grid with toroidal wrap-around and random user drops."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

import numpy as np

SQRT3 = np.sqrt(3.0)


class UserKind(enum.IntEnum):
    GUE_OUTDOOR = 0
    GUE_INDOOR = 1
    UAV = 2

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "UserKind":
        for kind, name in _KIND_LABELS.items():
            if name == label:
                return kind
        raise ValueError(f"unknown user kind {label!r}")


_KIND_LABELS = {
    UserKind.GUE_OUTDOOR: "gue-outdoor",
    UserKind.GUE_INDOOR: "gue-indoor",
    UserKind.UAV: "uav",
}


def _axial_to_xy(q, r, isd):
    # Basis vectors at 30 and 90 degrees: neighbouring sites sit at 30 + 60k
    # degrees, so sector boresights at 0/120/240 face Voronoi vertices.
    e1 = isd * np.array([SQRT3 / 2, 0.5])
    e2 = isd * np.array([0.0, 1.0])
    return np.outer(q, e1) + np.outer(r, e2)


def _hex_ring_coords(tiers):
    coords = [(0, 0)]
    for t in range(1, tiers + 1):
        # walk the ring at hex distance t along the six axial directions
        q, r = -t, t
        for dq, dr in ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)):
            for _ in range(t):
                coords.append((q, r))
                q, r = q + dq, r + dr
    return np.array(coords, dtype=int)


@dataclass(frozen=True)
class NetworkLayout:
    """Site positions, sector orientation and the wrap-around translations.

    BS ``b`` lives at site ``b // sectors_per_site`` and points at
    ``sector_azimuths[b % sectors_per_site]`` degrees (counter-clockwise from
    the x axis).
    """

    sites: np.ndarray
    sector_azimuths: tuple
    bs_height: float
    isd: float
    tiers: int
    wrap_vectors: np.ndarray
    sectors_per_site: int = 3

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_bs(self) -> int:
        return self.n_sites * self.sectors_per_site

    @property
    def bs_site(self) -> np.ndarray:
        return np.arange(self.n_bs) // self.sectors_per_site

    @property
    def bs_sector(self) -> np.ndarray:
        return np.arange(self.n_bs) % self.sectors_per_site

    @property
    def bs_azimuths(self) -> np.ndarray:
        return np.asarray(self.sector_azimuths, dtype=float)[self.bs_sector]

    @property
    def images(self) -> np.ndarray:
        """Identity plus the six cluster translations, shape (7, 2)."""
        return np.vstack([np.zeros((1, 2)), self.wrap_vectors])

    @property
    def hex_circumradius(self) -> float:
        return self.isd / SQRT3

    def in_site_hexagon(self, offsets: np.ndarray) -> np.ndarray:
        """Whether 2D offsets from a site centre fall inside its hexagonal cell."""
        offsets = np.asarray(offsets, dtype=float)
        inside = np.ones(offsets.shape[:-1], dtype=bool)
        for ang in (30.0, 90.0, 150.0):
            n = np.array([np.cos(np.radians(ang)), np.sin(np.radians(ang))])
            inside &= np.abs(offsets @ n) <= self.isd / 2 + 1e-9
        return inside


def build_layout(isd: float = 500.0, tiers: int = 3, bs_height: float = 25.0,
                 sector_azimuths: Iterable[float] = (0.0, 120.0, 240.0)) -> NetworkLayout:
    """Build a hexagonal grid of ``1 + 3 tiers (tiers + 1)`` sites around the origin.

    The wrap vectors are the translations that tile the plane with copies of
    the whole cluster; for ``tiers`` rings they are the six rotations of the
    axial shift ``(2 tiers + 1, -tiers)``, of length ``sqrt(n_sites) * isd``.
    """
    if isd <= 0:
        raise ValueError("isd must be positive")
    if tiers not in (1, 2, 3):
        raise ValueError(f"tiers must be 1, 2 or 3, got {tiers!r}")
    coords = _hex_ring_coords(tiers)
    sites = _axial_to_xy(coords[:, 0], coords[:, 1], isd)

    q, r = 2 * tiers + 1, -tiers
    shifts = []
    for _ in range(6):
        shifts.append((q, r))
        q, r = q + r, -q  # 60 degree rotation in axial coordinates
    shifts = np.array(shifts)
    wraps = _axial_to_xy(shifts[:, 0], shifts[:, 1], isd)
    return NetworkLayout(sites=sites, sector_azimuths=tuple(float(a) for a in sector_azimuths),
                         bs_height=float(bs_height), isd=float(isd), tiers=int(tiers),
                         wrap_vectors=wraps)


def wrap_displacement(a, b, layout: NetworkLayout) -> np.ndarray:
    """Return ``b' - a`` where ``b'`` is the wrap image of ``b`` closest to ``a``.

    Broadcasts over leading dimensions of ``a`` and ``b`` (last axis = 2).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = b - a
    cand = diff[..., None, :] + layout.images  # (..., 7, 2)
    d2 = np.einsum("...ij,...ij->...i", cand, cand)
    best = np.argmin(d2, axis=-1)
    return np.take_along_axis(cand, best[..., None, None], axis=-2)[..., 0, :]


@dataclass
class UserDrop:
    """One Monte Carlo realisation of user positions.

    ``floor`` is 0 for outdoor users; ``serving_bs`` is -1 until association.
    """

    positions: np.ndarray
    kinds: np.ndarray
    floors: np.ndarray
    building_floors: np.ndarray
    serving_bs: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.serving_bs is None:
            self.serving_bs = np.full(len(self.positions), -1, dtype=int)

    def __len__(self):
        return len(self.positions)

    @property
    def heights(self) -> np.ndarray:
        return self.positions[:, 2]

    @property
    def is_uav(self) -> np.ndarray:
        return self.kinds == UserKind.UAV

    @property
    def is_indoor(self) -> np.ndarray:
        return self.kinds == UserKind.GUE_INDOOR


def sample_uniform_xy(layout: NetworkLayout, n: int, rng: np.random.Generator,
                      min_distance: float = 0.0) -> np.ndarray:
    """Uniform 2D points over the union of site hexagons, keeping
    ``min_distance`` from the nearest site."""
    R = layout.hex_circumradius
    out = np.empty((0, 2))
    while len(out) < n:
        m = int(1.5 * (n - len(out))) + 16
        site = rng.integers(0, layout.n_sites, size=m)
        off = np.column_stack([rng.uniform(-R, R, m),
                               rng.uniform(-layout.isd / 2, layout.isd / 2, m)])
        ok = layout.in_site_hexagon(off) & (np.hypot(off[:, 0], off[:, 1]) >= min_distance)
        out = np.vstack([out, layout.sites[site[ok]] + off[ok]])
    return out[:n]


def drop_users(layout: NetworkLayout, density: float, uav_ratio: float,
               rng: np.random.Generator, *, indoor_fraction: float = 0.8,
               uav_height: Optional[float] = None, gue_height: float = 1.5,
               floor_height: float = 3.0, min_floors: int = 4, max_floors: int = 8,
               uav_min_height: float = 1.5, uav_max_height: float = 300.0,
               min_distance: float = 35.0) -> UserDrop:
    """Drop ``round(density * n_bs)`` users uniformly over the wrapped area.

    Each user is a UAV with probability ``uav_ratio``; each GUE is indoor with
    probability ``indoor_fraction``. Indoor users sit in a building with a
    uniform number of floors in ``[min_floors, max_floors]`` and on a uniform
    floor of it. UAV heights are uniform on ``[uav_min_height,
    uav_max_height]`` unless ``uav_height`` pins them.
    """
    if density <= 0:
        raise ValueError("density must be positive")
    if not 0.0 <= uav_ratio <= 1.0:
        raise ValueError("uav_ratio must lie in [0, 1]")
    n = int(round(density * layout.n_bs))
    xy = sample_uniform_xy(layout, n, rng, min_distance)

    kinds = np.full(n, UserKind.GUE_OUTDOOR, dtype=int)
    is_uav = rng.random(n) < uav_ratio
    indoor = ~is_uav & (rng.random(n) < indoor_fraction)
    kinds[indoor] = UserKind.GUE_INDOOR
    kinds[is_uav] = UserKind.UAV

    building = np.where(indoor, rng.integers(min_floors, max_floors + 1, size=n), 0)
    # floor uniform on 1..building for indoor users, 0 otherwise
    floors = np.where(indoor, 1 + np.floor(rng.random(n) * np.maximum(building, 1)).astype(int), 0)

    if uav_height is None:
        uav_h = rng.uniform(uav_min_height, uav_max_height, size=n)
    else:
        uav_h = np.full(n, float(uav_height))
    z = np.full(n, gue_height)
    z = np.where(indoor, gue_height + floor_height * (floors - 1), z)
    z = np.where(is_uav, uav_h, z)

    return UserDrop(positions=np.column_stack([xy, z]), kinds=kinds, floors=floors,
                    building_floors=building)


# -- line-oriented text dumps ------------------------------------------------

LAYOUT_HEADER = "# uavmimo layout v1: 'site <id> <x_m> <y_m>' and 'wrap <x_m> <y_m>' records"
DROP_HEADER = ("# uavmimo drop v1: 'user <id> <kind> <x_m> <y_m> <z_m> <floor> "
               "<building_floors> <serving_bs>' records")


def write_layout(layout: NetworkLayout, fh: TextIO) -> None:
    fh.write(LAYOUT_HEADER + "\n")
    az = " ".join(repr(a) for a in layout.sector_azimuths)
    fh.write(f"param isd {layout.isd!r}\nparam tiers {layout.tiers}\n"
             f"param bs_height {layout.bs_height!r}\nparam sector_azimuths {az}\n")
    for i, (x, y) in enumerate(layout.sites.tolist()):
        fh.write(f"site {i} {x!r} {y!r}\n")
    for x, y in layout.wrap_vectors.tolist():
        fh.write(f"wrap {x!r} {y!r}\n")


def read_layout(fh: TextIO) -> NetworkLayout:
    params, sites, wraps = {}, [], []
    for line in fh:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "param":
            params[parts[1]] = parts[2:]
        elif parts[0] == "site":
            sites.append((float(parts[2]), float(parts[3])))
        elif parts[0] == "wrap":
            wraps.append((float(parts[1]), float(parts[2])))
        else:
            raise ValueError(f"unexpected layout record {parts[0]!r}")
    return NetworkLayout(sites=np.array(sites), wrap_vectors=np.array(wraps),
                         isd=float(params["isd"][0]), tiers=int(params["tiers"][0]),
                         bs_height=float(params["bs_height"][0]),
                         sector_azimuths=tuple(float(a) for a in params["sector_azimuths"]))


def write_drop(drop: UserDrop, fh: TextIO) -> None:
    fh.write(DROP_HEADER + "\n")
    for i in range(len(drop)):
        x, y, z = drop.positions[i].tolist()
        fh.write(f"user {i} {UserKind(drop.kinds[i]).label} {x!r} {y!r} {z!r} "
                 f"{drop.floors[i]} {drop.building_floors[i]} {drop.serving_bs[i]}\n")


def read_drop(fh: TextIO) -> UserDrop:
    rows = []
    for line in fh:
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] != "user":
            raise ValueError(f"unexpected drop record {parts[0]!r}")
        rows.append(parts)
    return UserDrop(
        positions=np.array([[float(p[3]), float(p[4]), float(p[5])] for p in rows]).reshape(-1, 3),
        kinds=np.array([UserKind.from_label(p[2]) for p in rows], dtype=int),
        floors=np.array([int(p[6]) for p in rows], dtype=int),
        building_floors=np.array([int(p[7]) for p in rows], dtype=int),
        serving_bs=np.array([int(p[8]) for p in rows], dtype=int),
    )
