"""One Monte Carlo drop: users, links, association, scheduling, SINR, rates.

Every PRB instance needed to serve each associated user at least once is
evaluated with fresh fast fading. A user's spectral efficiency is the mean
over the instances it was scheduled on; its long-run rate multiplies that by
its round-robin PRB share.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import config as cfgmod
from .antenna import SteeringContext, array_factor_gain, direction_cosines, element_gain
from .channel import (LargeScaleState, LinkGeometry, complex_normal, draw_large_scale,
                      draw_scalar_fading, rician_weights)
from .deployment import NetworkLayout, UserDrop, build_layout, drop_users, wrap_displacement
from .mac import AssociationMap, Schedule, associate, compute_rsrp, schedule_round_robin
from .mu_mimo import (PilotPlan, PowerMode, estimate_channel, estimation_nmse, receive_pilots,
                      reuse3_pilot_plan, ul_tx_power, zf_precoder)
from .phy import McsTable, lin2db, noise_power_mw, se_to_rate, sinr_to_se

STREAMS = ("users", "large_scale", "fading", "pilots", "schedule")


def drop_streams(master_seed: int, drop_index: int) -> Dict[str, np.random.Generator]:
    """Independent generators for one drop, derived from (master_seed, drop_index)
    only, so results do not depend on execution order."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(drop_index,))
    return {name: np.random.Generator(np.random.PCG64(child))
            for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


@dataclass
class DropResult:
    drop: int
    kinds: np.ndarray
    heights: np.ndarray
    serving_bs: np.ndarray
    serving_d2d: np.ndarray
    se: np.ndarray         # mean spectral efficiency over scheduled PRB instances
    sinr_db: np.ndarray    # mean SINR (dB) over the same instances
    share: np.ndarray      # long-run scheduled PRBs per slot
    rate: np.ndarray       # bit/s
    nmse: np.ndarray       # channel-estimation error, NaN where not applicable
    instances: int = 0

    def __len__(self):
        return len(self.kinds)


@dataclass
class DropState:
    """Everything drawn for a drop before fast fading."""

    users: UserDrop
    geom: LinkGeometry
    ls: LargeScaleState
    assoc: AssociationMap
    schedule: Schedule
    array_factor_db: Optional[np.ndarray] = None

    def __post_init__(self):
        self.slow_gain = self.ls.slow_gain


class Simulator:
    def __init__(self, cfg: cfgmod.ExperimentConfig):
        cfgmod.validate(cfg)
        self.cfg = cfg
        d, r = cfg.deployment, cfg.radio
        self.layout: NetworkLayout = build_layout(d.isd, d.tiers, d.bs_height, d.sector_azimuths)
        self.array = cfg.antenna.array(cfg.mode)
        self.csi = cfgmod.effective_csi(cfg)
        self.table = McsTable.load(cfg.phy.mcs_table or None)
        self.prb_power_dbm = r.bs_power_dbm - 10 * np.log10(r.n_prbs)
        self.prb_power = 10 ** (self.prb_power_dbm / 10)
        self.noise_ue = float(noise_power_mw(r.prb_bandwidth, r.nf_ue_db, r.noise_density_dbm_hz))
        self.noise_bs = float(noise_power_mw(r.prb_bandwidth, r.nf_bs_db, r.noise_density_dbm_hz))
        self.wavelength = 0.299792458 / cfg.channel.carrier_ghz
        self.trace: Optional[list] = None  # set to a list to collect per-instance SINR terms
        if cfg.mode == "su" and cfg.mac.k_max_su != 1:
            raise cfgmod.ConfigError("[mac] k_max_su: the fixed analog beam serves one user per PRB")

    # -- drop set-up ---------------------------------------------------------

    def link_geometry(self, users: UserDrop) -> LinkGeometry:
        lay = self.layout
        rel = wrap_displacement(lay.sites[:, None, :], users.positions[None, :, :2], lay)
        d2d_site = np.hypot(rel[..., 0], rel[..., 1])
        az_site = np.degrees(np.arctan2(rel[..., 1], rel[..., 0]))
        d2d = np.repeat(d2d_site, lay.sectors_per_site, axis=0)
        az = np.repeat(az_site, lay.sectors_per_site, axis=0) - lay.bs_azimuths[:, None]
        az = (az + 180.0) % 360.0 - 180.0
        dh = users.heights[None, :] - lay.bs_height
        h = np.broadcast_to(users.heights, d2d.shape)
        return LinkGeometry(d2d=d2d, d3d=np.hypot(d2d, dh), user_height=h, azimuth=az,
                            elevation=np.degrees(np.arctan2(dh, d2d)))

    def steering_context(self, geom: LinkGeometry) -> SteeringContext:
        return SteeringContext(geom.azimuth, geom.elevation, self.wavelength)

    def prepare(self, drop_index: int, streams=None) -> DropState:
        cfg, d = self.cfg, self.cfg.deployment
        streams = streams or drop_streams(cfg.experiment.master_seed, drop_index)
        users = drop_users(self.layout, d.users_per_sector, d.uav_ratio, streams["users"],
                           indoor_fraction=d.indoor_fraction, uav_height=cfg.experiment.uav_height,
                           gue_height=d.gue_height, floor_height=d.floor_height,
                           min_floors=d.min_floors, max_floors=d.max_floors,
                           uav_min_height=d.uav_min_height, uav_max_height=d.uav_max_height,
                           min_distance=d.min_distance)
        geom = self.link_geometry(users)
        ctx = self.steering_context(geom)
        ls = draw_large_scale(geom, users.is_indoor, element_gain(self.array, ctx),
                              streams["large_scale"], cfg.channel, self.layout.bs_height,
                              self.layout.sectors_per_site)
        af_db = None
        if cfg.mode == "su":
            af_db = array_factor_gain(self.array, ctx)
            rsrp = compute_rsrp(ls, self.prb_power_dbm, af_db)
            k_max = cfg.mac.k_max_su
        else:
            rsrp = compute_rsrp(ls, self.prb_power_dbm)
            k_max = cfg.mac.k_max_mu
        assoc = associate(rsrp)
        users.serving_bs = assoc.serving_bs
        sched = schedule_round_robin(assoc, cfg.radio.n_prbs, k_max,
                                     rng=streams["schedule"] if cfg.mac.shuffle else None,
                                     n_bs=self.layout.n_bs)
        return DropState(users, geom, ls, assoc, sched, af_db)

    # -- evaluation ------------------------------------------------------------

    def run_drop(self, drop_index: int) -> DropResult:
        streams = drop_streams(self.cfg.experiment.master_seed, drop_index)
        state = self.prepare(drop_index, streams)
        n = len(state.users)
        acc = {"se": np.zeros(n), "sinr_db": np.zeros(n), "count": np.zeros(n),
               "nmse": np.zeros(n), "nmse_count": np.zeros(n)}
        n_inst = state.schedule.instances_to_cover()
        for inst, sets in enumerate(state.schedule.iter_instances(n_inst)):
            if self.cfg.mode == "su":
                self._su_instance(state, sets, streams["fading"], acc)
            else:
                self._mu_instance(state, sets, streams["fading"], streams["pilots"], acc)
        return self._finish(drop_index, state, acc, n_inst)

    def _record(self, acc, users, signal, interference):
        sinr = signal / interference
        with np.errstate(divide="ignore"):
            sinr_db = lin2db(sinr)
        acc["se"][users] += sinr_to_se(sinr_db, self.table)
        acc["sinr_db"][users] += np.maximum(sinr_db, -100.0)
        acc["count"][users] += 1

    def _su_instance(self, state: DropState, sets, rng, acc):
        bs = np.array([b for b, s in enumerate(sets) if len(s)], dtype=int)
        if not len(bs):
            return
        users = np.array([sets[b][0] for b in bs], dtype=int)
        gain = state.slow_gain[np.ix_(bs, users)] * 10 ** (state.array_factor_db[np.ix_(bs, users)] / 10)
        fading = draw_scalar_fading(state.ls.los[np.ix_(bs, users)], self.cfg.channel.k_factor_db, rng)
        rx = self.prb_power * gain * np.abs(fading) ** 2  # rx[j, u]: power from BS j at user u
        signal = np.diag(rx).copy()
        inter = rx.sum(axis=0) - signal
        if self.trace is not None:
            self.trace.append(dict(users=users, signal=signal, intra=np.zeros_like(signal), inter=inter))
        self._record(acc, users, signal, inter + self.noise_ue)

    def _steering_factors(self, state: DropState, bs: int, users: np.ndarray):
        """Per-user row and column phasors of the planar array; the full
        steering vector is their Kronecker product, repeated per slant."""
        arr = self.array
        ctx = SteeringContext(state.geom.azimuth[bs, users], state.geom.elevation[bs, users],
                              self.wavelength)
        _, y, z = direction_cosines(arr, ctx)
        d = arr.element_spacing
        rows = np.exp(2j * np.pi * d * np.multiply.outer(z, np.arange(arr.rows)))
        cols = np.exp(2j * np.pi * d * np.multiply.outer(y, np.arange(arr.cols)))
        return rows, cols

    def _link_amplitudes(self, state: DropState, bs: int, users: np.ndarray):
        w_los, w_nlos = rician_weights(state.ls.los[bs, users], self.cfg.channel.k_factor_db)
        amp = np.sqrt(state.slow_gain[bs, users] * self.array.power_per_port)
        return amp * w_los, amp * w_nlos

    def _link_channels(self, state: DropState, bs: int, users: np.ndarray, rng) -> np.ndarray:
        """Channels from ``bs`` to ``users``, shape (n_users, n_antennas)."""
        rows, cols = self._steering_factors(state, bs, users)
        a = (rows[:, :, None] * cols[:, None, :]).reshape(len(users), -1)
        if self.array.cross_polarized:
            a = np.repeat(a, 2, axis=1)
        c_los, c_nlos = self._link_amplitudes(state, bs, users)
        return c_los[:, None] * a + c_nlos[:, None] * complex_normal(rng, a.shape)

    def _projected_gains(self, state: DropState, bs: int, users: np.ndarray, W: np.ndarray,
                         rng) -> np.ndarray:
        """``|h^H W|^2`` for links whose scatter is used nowhere else.

        ``h^H W = c_los a^H W + c_nlos conj(x)`` with ``x ~ CN(0, W^H W)``,
        which has the same law as drawing the full i.i.d. scatter vector.
        """
        arr = self.array
        K = W.shape[1]
        c_los, c_nlos = self._link_amplitudes(state, bs, users)
        out = np.zeros((len(users), K), dtype=complex)
        los = np.flatnonzero(c_los > 0)
        if len(los):
            rows, cols = self._steering_factors(state, bs, users[los])
            Wp = W.reshape(arr.rows, arr.cols, -1, K).sum(axis=2)
            out[los] = c_los[los, None] * np.einsum("um,un,mnk->uk", rows.conj(), cols.conj(), Wp)
        gram = W.conj().T @ W
        try:
            L = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            lam, V = np.linalg.eigh(gram)
            L = V * np.sqrt(np.maximum(lam, 0.0))
        x = complex_normal(rng, (len(users), K)) @ L.T
        out += c_nlos[:, None] * np.conj(x)
        return np.abs(out) ** 2

    def _mu_instance(self, state: DropState, sets, rng, pilot_rng, acc):
        U = np.concatenate(sets).astype(int)
        if not len(U):
            return
        owner = np.repeat(np.arange(len(sets)), [len(s) for s in sets])
        M = len(U)
        plan = reuse3_pilot_plan(sets, self.cfg.mac.k_max_mu, self.layout.sectors_per_site)
        if self.csi != "perfect":
            mode = PowerMode.EQUAL if self.csi == "r3ep" else PowerMode.FRACTIONAL
            serving_gain = state.slow_gain[state.assoc.serving_bs[U], U]
            powers = ul_tx_power(self.cfg.uplink.power_config(), serving_gain, mode)
        signal = np.zeros(M)
        intra = np.zeros(M)
        inter = np.zeros(M)
        for b in np.flatnonzero([len(s) for s in sets]):
            own = np.flatnonzero(owner == b)
            if self.csi == "perfect":
                full = own
            else:
                # own users plus everyone reusing one of their pilots
                full = np.flatnonzero(np.isin(plan.indices, plan.indices[own]))
            H = self._link_channels(state, b, U[full], rng)  # row u is h^T
            at = np.searchsorted(full, own)
            if self.csi == "perfect":
                h_hat = H[at].T
            else:
                sub = PilotPlan(plan.codebook, plan.indices[full], plan.reuse)
                Y = receive_pilots(H.T, powers[full], sub, self.noise_bs, pilot_rng)
                h_hat = estimate_channel(Y, plan.codebook[:, plan.indices[own]], powers[own])
                acc["nmse"][U[own]] += estimation_nmse(h_hat, H[at].T)
                acc["nmse_count"][U[own]] += 1
            pre = zf_precoder(h_hat, self.prb_power, self.cfg.uplink.cond_threshold)
            R = np.zeros((M, pre.k))
            R[full] = np.abs(np.conj(H) @ pre.W) ** 2
            rest = np.setdiff1d(np.arange(M), full, assume_unique=True)
            if len(rest) and pre.k:
                R[rest] = self._projected_gains(state, b, U[rest], pre.W, rng)
            total = R.sum(axis=1)
            mask = owner != b
            inter[mask] += total[mask]
            # users dropped by the ZF rank guard get no signal, only leakage
            intra[own] = total[own]
            served_rows = own[pre.served]
            cross = R[served_rows]
            signal[served_rows] = cross[np.arange(pre.k), np.arange(pre.k)]
            cross[np.arange(pre.k), np.arange(pre.k)] = 0.0
            intra[served_rows] = cross.sum(axis=1)
        if self.trace is not None:
            self.trace.append(dict(users=U, signal=signal, intra=intra, inter=inter))
        self._record(acc, U, signal, intra + inter + self.noise_ue)

    def _finish(self, drop_index, state: DropState, acc, n_inst) -> DropResult:
        r = self.cfg.radio
        cnt = np.maximum(acc["count"], 1)
        se = acc["se"] / cnt
        share = state.schedule.prb_share()
        rate = se_to_rate(se, share, r.prb_bandwidth, r.overhead_symbols, r.symbols_per_slot)
        with np.errstate(invalid="ignore", divide="ignore"):
            nmse = np.where(acc["nmse_count"] > 0, acc["nmse"] / np.maximum(acc["nmse_count"], 1), np.nan)
        u = state.users
        serving = state.assoc.serving_bs
        return DropResult(drop=drop_index, kinds=u.kinds.copy(), heights=u.heights.copy(),
                          serving_bs=serving.copy(),
                          serving_d2d=state.geom.d2d[serving, np.arange(len(u))].copy(),
                          se=se, sinr_db=acc["sinr_db"] / cnt, share=share, rate=rate,
                          nmse=nmse, instances=n_inst)
