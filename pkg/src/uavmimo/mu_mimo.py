"""Uplink pilots, fractional power control, LS estimation and ZF precoding."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import complex_normal


class PowerMode(str, enum.Enum):
    FRACTIONAL = "fractional"
    EQUAL = "equal"


@dataclass(frozen=True)
class UplinkPowerConfig:
    p_max: float = 23.0   # dBm
    p0: float = -58.0     # dBm
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.p0 > self.p_max:
            raise ValueError("p0 must not exceed p_max")


def dbm_to_mw(p):
    return 10.0 ** (np.asarray(p, dtype=float) / 10.0)


def mw_to_dbm(p):
    return 10.0 * np.log10(p)


def ul_tx_power(cfg: UplinkPowerConfig, slow_gain, mode: PowerMode | str = PowerMode.FRACTIONAL):
    """Pilot transmit power in mW.

    Fractional mode compensates a fraction ``alpha`` of the coupling loss
    ``L = -10 log10(slow_gain)``: ``min(p_max, p0 + alpha L)`` in dBm.
    Equal mode sends every pilot at ``p_max``.
    """
    g = np.asarray(slow_gain, dtype=float)
    if np.any(g <= 0):
        raise ValueError("slow_gain must be positive")
    if PowerMode(mode) is PowerMode.EQUAL:
        p = np.full(g.shape, cfg.p_max)
    else:
        p = np.minimum(cfg.p_max, cfg.p0 + cfg.alpha * -10.0 * np.log10(g))
    return dbm_to_mw(p)


@dataclass
class PilotPlan:
    """Pilot codebook and the index each scheduled user sends.

    ``codebook[:, i]`` is pilot ``i`` (columns are orthonormal). ``indices``
    lines up with the flattened list of scheduled users of one PRB.
    """

    codebook: np.ndarray
    indices: np.ndarray
    reuse: str = "reuse3"

    @property
    def length(self) -> int:
        return self.codebook.shape[0]


def reuse3_pilot_plan(served_sets: Sequence[np.ndarray], k_max: int,
                      sectors_per_site: int = 3) -> PilotPlan:
    """Pilot ``sector * k_max + position`` for the user in slot ``position``
    of a BS in sector ``sector``: orthogonal inside a site, reused across
    sites."""
    idx = []
    for b, users in enumerate(served_sets):
        sector = b % sectors_per_site
        idx.extend(sector * k_max + np.arange(len(users)))
    m_p = sectors_per_site * k_max
    return PilotPlan(codebook=np.eye(m_p, dtype=complex), indices=np.asarray(idx, dtype=int))


def receive_pilots(channels: np.ndarray, powers, plan: PilotPlan, noise_var: float = 0.0,
                   rng: np.random.Generator | None = None) -> np.ndarray:
    """Pilot observation ``Y = sum_u sqrt(P_u) h_u v_{i_u}^T + N`` at one BS.

    ``channels`` is ``(n_antennas, n_users)`` from this BS to every pilot
    sender. Noise is i.i.d. CN(0, noise_var); pass ``rng=None`` for a
    noiseless observation.
    """
    idx = np.asarray(plan.indices)
    if len(idx) != channels.shape[1] or np.any(idx < 0) or np.any(idx >= plan.codebook.shape[1]):
        raise ValueError("every pilot sender needs a valid pilot index")
    tx = plan.codebook[:, idx].T * np.sqrt(np.asarray(powers, dtype=float))[:, None]  # (U, M_p)
    y = channels @ tx
    if rng is not None and noise_var > 0:
        y = y + np.sqrt(noise_var) * complex_normal(rng, y.shape, y.dtype)
    return y


def estimate_channel(y: np.ndarray, pilot, own_power) -> np.ndarray:
    """Least-squares estimate ``Y v* / sqrt(P)``.

    ``pilot`` is either a pilot vector or a ``(M_p, K)`` block of them (one
    column per user) with matching ``own_power``.
    """
    p = np.asarray(own_power, dtype=float)
    if np.any(p <= 0):
        raise ValueError("own_power must be positive")
    return (y @ np.conj(pilot)) / np.sqrt(p)


@dataclass
class PrecoderSet:
    """Precoders of one BS on one PRB.

    ``W[:, i]`` serves ``served[i]`` (column index into the estimate matrix);
    ``dropped`` lists columns removed to make the Gram matrix invertible.
    """

    W: np.ndarray
    served: np.ndarray
    dropped: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def k(self) -> int:
        return self.W.shape[1]


def zf_precoder(h_hat: np.ndarray, p_b: float, cond_threshold: float = 1e8) -> PrecoderSet:
    """Zero-forcing ``W = H (H^H H)^-1 D^-1/2`` with ``||w_k||^2 = p_b / K``.

    When the Gram matrix is ill-conditioned the column with the smallest
    norm is removed and the solve repeated.
    """
    keep = np.arange(h_hat.shape[1])
    dropped = []
    while len(keep):
        H = h_hat[:, keep]
        gram = H.conj().T @ H
        if np.linalg.cond(gram) <= cond_threshold:
            break
        weakest = int(np.argmin(np.linalg.norm(H, axis=0)))
        dropped.append(keep[weakest])
        keep = np.delete(keep, weakest)
    if not len(keep):
        return PrecoderSet(W=np.zeros((h_hat.shape[0], 0), dtype=h_hat.dtype),
                           served=keep, dropped=np.array(dropped, dtype=int))
    W = np.linalg.solve(gram.T, H.T).T  # H gram^-1 (gram is Hermitian)
    W = W * np.sqrt(p_b / len(keep)) / np.linalg.norm(W, axis=0)
    return PrecoderSet(W=W, served=keep, dropped=np.array(dropped, dtype=int))


def single_user_precoder(n_antennas: int, p_b: float) -> np.ndarray:
    """Fixed analog beam: identical entries, ``||w||^2 = p_b``."""
    return np.full(n_antennas, np.sqrt(p_b / n_antennas), dtype=complex)


def single_user_beam(slow_gain, array_factor_gain_db, fading) -> np.ndarray:
    """Effective scalar channel power of the fixed beam per unit transmit
    power: slow gain (with element gain) x array factor gain x ``|fading|^2``."""
    return (np.asarray(slow_gain) * 10.0 ** (np.asarray(array_factor_gain_db) / 10.0)
            * np.abs(fading) ** 2)


def estimation_nmse(h_hat: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Per-column ``||h_hat - h||^2 / ||h||^2``."""
    return np.sum(np.abs(h_hat - h) ** 2, axis=0) / np.sum(np.abs(h) ** 2, axis=0)
