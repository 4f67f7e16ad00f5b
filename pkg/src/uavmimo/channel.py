"""Height-dependent urban-macro propagation for ground users and UAVs.

Three regimes, switched on user height:

* ground (h <= 22.5 m): UMa LoS probability and dual-slope path loss;
* low aerial (22.5 < h <= 100 m): aerial LoS probability, LoS exponent 2.2
  and a height-dependent NLoS exponent;
* high aerial (h > 100 m): always LoS, free-space exponent.

Fast fading is Rician: a LoS steering component plus i.i.d. Rayleigh scatter.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .antenna import ArrayConfig, SteeringContext, steering_vector

C = 299_792_458.0


@dataclass(frozen=True)
class ChannelParams:
    carrier_ghz: float = 2.0
    ground_max_height: float = 22.5
    free_space_height: float = 100.0
    min_height: float = 1.5
    max_height: float = 300.0
    pl_intercept: float = 28.0
    aerial_los_exponent: float = 22.0
    free_space_exponent: float = 20.0
    env_height: float = 1.0
    sigma_los_ground: float = 4.0
    sigma_nlos_ground: float = 6.0
    sigma_los_aerial_scale: float = 4.64
    sigma_los_aerial_decay: float = 0.0066
    sigma_los_aerial_floor: float = 0.0
    sigma_nlos_aerial: float = 6.0
    k_factor_db: float = 9.0
    o2i_base_db: float = 20.0
    o2i_per_m: float = 0.5
    indoor_max_distance: float = 25.0

    def replace(self, **kw) -> "ChannelParams":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kw)
        return ChannelParams(**vals)


DEFAULT_PARAMS = ChannelParams()


def _check_heights(h, p):
    h = np.asarray(h, dtype=float)
    if np.any(h < p.min_height - 1e-9) or np.any(h > p.max_height + 1e-9):
        raise ValueError(f"user height outside modelled range [{p.min_height}, {p.max_height}] m")
    return h


def los_probability(d2d, user_height, params: ChannelParams = DEFAULT_PARAMS):
    d = np.maximum(np.asarray(d2d, dtype=float), 0.0)
    h = _check_heights(user_height, params)
    d, h = np.broadcast_arrays(d, h)
    ds = np.maximum(d, 1e-9)

    # ground: UMa with the height-dependent correction above 13 m
    c_h = np.where(h > 13.0, (np.clip(h, 13.0, 23.0) - 13.0) / 10.0, 0.0) ** 1.5
    p_ground = ((18.0 / ds + np.exp(-ds / 63.0) * (1 - 18.0 / ds))
                * (1 + c_h * 1.25 * (ds / 100.0) ** 3 * np.exp(-ds / 150.0)))
    p_ground = np.where(d <= 18.0, 1.0, p_ground)

    hl = np.log10(np.maximum(h, 1.0))
    d1 = np.maximum(460.0 * hl - 700.0, 18.0)
    p1 = np.maximum(4300.0 * hl - 3800.0, 1.0)
    p_aerial = np.where(d <= d1, 1.0, d1 / ds + np.exp(-ds / p1) * (1 - d1 / ds))

    p = np.where(h <= params.ground_max_height, p_ground, p_aerial)
    p = np.where(h > params.free_space_height, 1.0, p)
    p = np.clip(p, 0.0, 1.0)
    return p if p.ndim else float(p)


def path_loss(d3d, user_height, los, fc_ghz=None, bs_height: float = 25.0,
              params: ChannelParams = DEFAULT_PARAMS):
    """Path loss in dB; ``los`` may be an array of flags."""
    fc = params.carrier_ghz if fc_ghz is None else fc_ghz
    d3 = np.asarray(d3d, dtype=float)
    if np.any(d3 <= 0):
        raise ValueError("d3d must be positive")
    h = np.asarray(user_height, dtype=float)
    los = np.asarray(los, dtype=bool)
    d3, h, los = np.broadcast_arrays(d3, h, los)
    lf = 20 * np.log10(fc)
    ld = np.log10(d3)
    A = params.pl_intercept

    # ground UMa, dual slope about the breakpoint distance
    d2 = np.sqrt(np.maximum(d3 ** 2 - (bs_height - h) ** 2, 1.0))
    d_bp = 4 * (bs_height - params.env_height) * np.maximum(h - params.env_height, 1e-3) * fc * 1e9 / C
    pl1 = A + 22.0 * ld + lf
    pl2 = A + 40.0 * ld + lf - 9.0 * np.log10(d_bp ** 2 + (bs_height - h) ** 2)
    g_los = np.where(d2 <= d_bp, pl1, pl2)
    g_nlos = np.maximum(g_los, 13.54 + 39.08 * ld + lf - 0.6 * (h - 1.5))
    ground = np.where(los, g_los, g_nlos)

    a_los = A + params.aerial_los_exponent * ld + lf
    a_nlos = -17.5 + (46.0 - 7.0 * np.log10(np.maximum(h, 1.0))) * ld \
        + 20 * np.log10(40 * np.pi * fc / 3.0)
    aerial = np.where(los, a_los, np.maximum(a_los, a_nlos))

    free = A + params.free_space_exponent * ld + lf
    pl = np.where(h <= params.ground_max_height, ground, aerial)
    pl = np.where(h > params.free_space_height, free, pl)
    return pl if pl.ndim else float(pl)


def shadowing_sigma(user_height, los, params: ChannelParams = DEFAULT_PARAMS):
    h = np.asarray(user_height, dtype=float)
    los = np.asarray(los, dtype=bool)
    aerial_los = np.maximum(params.sigma_los_aerial_scale * np.exp(-params.sigma_los_aerial_decay * h),
                            params.sigma_los_aerial_floor)
    ground = np.where(los, params.sigma_los_ground, params.sigma_nlos_ground)
    aerial = np.where(los, aerial_los, params.sigma_nlos_aerial)
    return np.where(h <= params.ground_max_height, ground, aerial)


@dataclass
class LinkGeometry:
    """Per-link geometry, arrays of shape (n_bs, n_users)."""

    d2d: np.ndarray
    d3d: np.ndarray
    user_height: np.ndarray
    azimuth: np.ndarray    # degrees from the sector boresight
    elevation: np.ndarray  # degrees, positive when the user is above the BS


@dataclass
class LargeScaleState:
    """Slow link state; all fields broadcast to the link-array shape.

    ``slow_gain`` is the linear power gain including path loss, shadowing,
    O2I penetration and the element gain at the link's angles.
    """

    los: np.ndarray
    path_loss: np.ndarray
    shadowing: np.ndarray
    o2i_loss: np.ndarray
    element_gain: np.ndarray

    @property
    def slow_gain_db(self) -> np.ndarray:
        return self.element_gain - self.path_loss - self.shadowing - self.o2i_loss

    @property
    def slow_gain(self) -> np.ndarray:
        return 10.0 ** (self.slow_gain_db / 10.0)


def draw_large_scale(geom: LinkGeometry, indoor, element_gain_db, rng: np.random.Generator,
                     params: ChannelParams = DEFAULT_PARAMS, bs_height: float = 25.0,
                     sectors_per_site: int = 3) -> LargeScaleState:
    """Draw LoS state, shadowing and O2I loss for every (BS, user) link.

    Rows of the link arrays are BSs grouped by site. LoS state and shadowing
    are drawn once per (site, user) and shared by the co-located sectors;
    O2I loss is drawn once per indoor user.
    """
    n_bs, n_users = geom.d2d.shape
    if n_bs % sectors_per_site:
        raise ValueError("BS count is not a multiple of sectors_per_site")
    n_sites = n_bs // sectors_per_site
    site_rows = np.arange(n_sites) * sectors_per_site  # geometry of sector 0 per site

    p_los = los_probability(geom.d2d[site_rows], geom.user_height[site_rows], params)
    los_site = rng.random((n_sites, n_users)) < p_los
    sigma = shadowing_sigma(geom.user_height[site_rows], los_site, params)
    sf_site = sigma * rng.standard_normal((n_sites, n_users))

    los = np.repeat(los_site, sectors_per_site, axis=0)
    sf = np.repeat(sf_site, sectors_per_site, axis=0)
    pl = path_loss(geom.d3d, geom.user_height, los, params.carrier_ghz, bs_height, params)

    indoor = np.asarray(indoor, dtype=bool)
    d_in = rng.uniform(0.0, params.indoor_max_distance, size=n_users)
    o2i_user = np.where(indoor, params.o2i_base_db + params.o2i_per_m * d_in, 0.0)
    o2i = np.broadcast_to(o2i_user, (n_bs, n_users))
    return LargeScaleState(los=los, path_loss=pl, shadowing=sf, o2i_loss=o2i,
                           element_gain=np.broadcast_to(element_gain_db, (n_bs, n_users)))


def complex_normal(rng: np.random.Generator, shape, dtype=np.complex128):
    """i.i.d. CN(0, 1) samples."""
    real = np.float32 if dtype == np.complex64 else np.float64
    shape = (shape,) if np.ndim(shape) == 0 else tuple(shape)
    z = rng.standard_normal(shape + (2,), dtype=real)
    return (z.view(dtype)[..., 0] * np.sqrt(0.5)).astype(dtype, copy=False)


def rician_weights(los, k_factor_db):
    """Amplitude weights ``(sqrt(K/(K+1)), sqrt(1/(K+1)))``; K = 0 for NLoS."""
    K = np.where(np.asarray(los, dtype=bool), 10.0 ** (k_factor_db / 10.0), 0.0)
    return np.sqrt(K / (K + 1)), np.sqrt(1.0 / (K + 1))


def draw_channel(cfg: ArrayConfig, ls: LargeScaleState, ctx: SteeringContext, k_factor_db: float,
                 rng: np.random.Generator, steering=None) -> np.ndarray:
    """Antenna-domain channel, shape ``link_shape + (n_antennas,)``.

    ``h = sqrt(g_port) (sqrt(K/(K+1)) a + sqrt(1/(K+1)) w)`` with ``g_port``
    the slow gain times the per-port polarisation share, ``a`` the steering
    vector and ``w`` i.i.d. CN(0, 1) per port.
    """
    a = steering_vector(cfg, ctx) if steering is None else steering
    g = np.sqrt(np.asarray(ls.slow_gain) * cfg.power_per_port)
    w_los, w_nlos = rician_weights(ls.los, k_factor_db)
    scatter = complex_normal(rng, np.broadcast_shapes(g.shape + (1,), a.shape))
    return g[..., None] * (w_los[..., None] * a + w_nlos[..., None] * scatter)


def expected_channel_power(cfg: ArrayConfig, slow_gain):
    """Closed-form ``E||h||^2`` for :func:`draw_channel`."""
    return cfg.n_antennas * cfg.power_per_port * np.asarray(slow_gain)


def draw_scalar_fading(los, k_factor_db, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean-power Rician scalar with a uniform LoS phase."""
    los = np.asarray(los, dtype=bool)
    w_los, w_nlos = rician_weights(los, k_factor_db)
    phase = np.exp(2j * np.pi * rng.random(los.shape))
    return w_los * phase + w_nlos * complex_normal(rng, los.shape)
