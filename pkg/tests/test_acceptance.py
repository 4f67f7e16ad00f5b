"""Acceptance gate: criteria 1-10 at their stated tolerances.

Each test records one PASS/FAIL line, printed in the pytest terminal summary
(and to stdout when the module is run as a script). The Monte Carlo trend
criteria use 500 drops; set UAVMIMO_ACCEPTANCE_DROPS to override for a quick
look (the recorded line shows the drop count actually used).
"""

import os
import time
from functools import lru_cache

import numpy as np
import pytest

from uavmimo import config as C
from uavmimo.antenna import ArrayConfig, gain_vs_distance
from uavmimo.channel import complex_normal
from uavmimo.harness import ALL, emit_outputs, run_experiment
from uavmimo.mu_mimo import (PilotPlan, UplinkPowerConfig, estimate_channel, mw_to_dbm,
                             receive_pilots, reuse3_pilot_plan, ul_tx_power, zf_precoder)
from uavmimo.phy import compute_sinr, default_mcs_table, sinr_to_se

DROPS = int(os.environ.get("UAVMIMO_ACCEPTANCE_DROPS", "500"))
WORKERS = int(os.environ.get("UAVMIMO_ACCEPTANCE_WORKERS", "1"))
SU_HEIGHTS = (1.5, 50.0, 150.0, 300.0)

RESULTS = {}


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


@lru_cache(maxsize=None)
def experiment(mode, csi="perfect", uav_height=None):
    cfg = C.ExperimentConfig().with_(experiment={"mode": mode, "csi": csi, "uav_height": uav_height,
                                                 "drops": DROPS, "workers": WORKERS})
    t0 = time.time()
    summary = run_experiment(cfg)
    return summary, time.time() - t0


def pct(x):
    return f"{100 * x:.1f}%"


# -- 1: antenna geometry ------------------------------------------------------------

def test_criterion_1_antenna_geometry():
    arr = ArrayConfig.single_user()
    d = np.arange(1.0, 1000.0 + 0.05, 0.1)
    g_ground = gain_vs_distance(arr, 25.0, 1.5, d)
    peak_at = d[np.argmax(g_ground)]
    # global pattern maximum: element peak along the tilt plus the coherent array gain
    global_max = arr.element_max_gain + 10 * np.log10(arr.rows)
    aerial_best = gain_vs_distance(arr, 25.0, 50.0, d).max()
    ok = 80.0 <= peak_at <= 180.0 and aerial_best < global_max - 3.0
    assert record(1, ok, f"1.5 m peak at {peak_at:.1f} m; 50 m user best {aerial_best:.2f} dBi "
                         f"vs pattern max {global_max:.2f} dBi")


# -- 2: single-user height degradation ----------------------------------------------------

def test_criterion_2_su_height_degradation():
    rel, secs = {}, 0.0
    for h in SU_HEIGHTS:
        s, t = experiment("su", uav_height=h)
        rel[h], secs = s.reliability("uav"), secs + t
    r = [rel[h] for h in SU_HEIGHTS]
    steps = [r[0] - r[1], r[1] - r[2]]
    ok = (all(st >= 0.10 for st in steps)
          and abs(r[0] - 0.87) <= 0.15 and abs(r[1] - 0.35) <= 0.15
          and r[2] <= 0.10 and r[3] <= 0.10)
    detail = " / ".join(f"{h:g} m {pct(x)}" for h, x in rel.items())
    assert record(2, ok, f"UAV reliability {detail} (targets 87/35/2/1%); "
                         f"{DROPS} drops x4 in {secs / 60:.1f} min")


# -- 3: MU perfect CSI and ordering ------------------------------------------------------

def test_criterion_3_mu_perfect_csi():
    perfect, tp = experiment("mu", "perfect")
    r3pc, _ = experiment("mu", "r3pc")
    su, _ = experiment("su")
    bins = perfect.uav_bins()
    rows, ok = [], bool(bins)
    for b in bins:
        p, c, s = perfect.reliability("uav", b), r3pc.reliability("uav", b), su.reliability("uav", b)
        ok &= p >= 0.90 and p >= c >= s
        rows.append(f"{b}: {pct(p)}>={pct(c)}>={pct(s)}")
    assert record(3, ok, "perfect>=r3pc>=su per bin " + "; ".join(rows)
                         + f"; perfect run {tp / 60:.1f} min")


# -- 4: R3 PC vs R3 EP ----------------------------------------------------------------------

def test_criterion_4_power_control():
    pc, tpc = experiment("mu", "r3pc")
    ep, tep = experiment("mu", "r3ep")
    med_pc, med_ep = pc.group("gue").median, ep.group("gue").median
    rel_pc = pc.reliability("uav")
    ok = med_pc > med_ep and rel_pc >= 0.55
    assert record(4, ok, f"GUE median {med_pc / 1e6:.2f} Mbps (PC) vs {med_ep / 1e6:.2f} Mbps (EP); "
                         f"UAV reliability under PC {pct(rel_pc)} (>= 55%); "
                         f"{(tpc + tep) / 60:.1f} min")


# -- 5: ZF correctness ------------------------------------------------------------------------

def test_criterion_5_zf():
    rng = np.random.default_rng(5)
    p_b = 10 ** (29 / 10)
    worst_off = worst_pow = 0.0
    for _ in range(1000):
        h = complex_normal(rng, (128, 8))
        W = zf_precoder(h, p_b).W
        g = np.abs(h.conj().T @ W) / np.outer(np.linalg.norm(h, axis=0), np.linalg.norm(W, axis=0))
        np.fill_diagonal(g, 0.0)
        worst_off = max(worst_off, g.max())
        worst_pow = max(worst_pow, np.abs(np.sum(np.abs(W) ** 2, axis=0) - p_b / 8).max())
    ok = worst_off < 1e-10 and worst_pow < 1e-9 * p_b
    assert record(5, ok, f"max normalised off-diagonal {worst_off:.1e}; "
                         f"max |‖w‖²-P/8| {worst_pow / p_b:.1e}·P")


# -- 6: estimator oracle ------------------------------------------------------------------------

def test_criterion_6_estimator():
    rng = np.random.default_rng(6)
    worst, sets_ok = 0.0, True
    for _ in range(100):
        n_a, k_max = int(rng.integers(1, 9)), int(rng.integers(1, 4))
        sizes = rng.integers(1, k_max + 1, size=9)  # 3 sites x 3 sectors
        starts = np.concatenate([[0], np.cumsum(sizes)])
        plan = reuse3_pilot_plan([np.arange(a, b) for a, b in zip(starts[:-1], starts[1:])], k_max)
        n_u = int(sizes.sum())
        owner = np.repeat(np.arange(9), sizes)
        h = complex_normal(rng, (n_a, n_u))
        p = rng.uniform(0.01, 5.0, n_u)
        noise = 0.1 * complex_normal(rng, (n_a, plan.length))
        y = receive_pilots(h, p, plan) + noise
        # brute-force received signal, then pilot correlation
        y_ref = noise.astype(complex).copy()
        for u in range(n_u):
            y_ref += np.sqrt(p[u]) * np.outer(h[:, u], plan.codebook[:, plan.indices[u]])
        for u in range(n_u):
            v = plan.codebook[:, plan.indices[u]]
            est = estimate_channel(y, v, p[u])
            ref = y_ref @ v.conj() / np.sqrt(p[u])
            worst = max(worst, np.max(np.abs(est - ref)) / np.max(np.abs(ref)))
            copilot = {j for j in range(n_u) if j != u and plan.indices[j] == plan.indices[u]}
            predicted = {j for j in range(n_u) if owner[j] // 3 != owner[u] // 3
                         and owner[j] % 3 == owner[u] % 3
                         and j - starts[owner[j]] == u - starts[owner[u]]}
            sets_ok &= copilot == predicted
            contam = est - h[:, u] - noise @ v.conj() / np.sqrt(p[u])
            expect = sum((np.sqrt(p[j] / p[u]) * h[:, j] for j in copilot), np.zeros(n_a, complex))
            worst = max(worst, np.max(np.abs(contam - expect)) / max(np.max(np.abs(ref)), 1e-300))
    ok = worst < 1e-12 and sets_ok
    assert record(6, ok, f"max relative deviation {worst:.1e}; co-pilot sets exact: {sets_ok}")


# -- 7: SINR oracle ------------------------------------------------------------------------------

def test_criterion_7_sinr_symbol_level():
    rng = np.random.default_rng(7)
    n_sym, worst = 10 ** 6, 0.0
    for _ in range(10):
        n_bs, n_a, k = 3, 4, 2
        H = complex_normal(rng, (n_bs, n_bs, n_a, k)) * rng.uniform(0.2, 1.5, (n_bs, n_bs, 1, k))
        W = [zf_precoder(H[b, b], rng.uniform(0.5, 2.0)).W for b in range(n_bs)]
        b, i = int(rng.integers(n_bs)), int(rng.integers(k))
        noise = float(rng.uniform(0.05, 0.5))
        rec = compute_sinr(H[b, b][:, i], W[b], i, [(H[j, b][:, i], W[j]) for j in range(n_bs) if j != b],
                           noise)
        y = np.sqrt(noise) * complex_normal(rng, n_sym)
        for j in range(n_bs):
            s = (rng.choice([-1.0, 1.0], (n_sym, k)) + 1j * rng.choice([-1.0, 1.0], (n_sym, k))) / np.sqrt(2)
            y += s @ (H[j, b][:, i].conj() @ W[j])
            if j == b:
                desired = s[:, i]
        g = H[b, b][:, i].conj() @ W[b][:, i]
        mc = 1.0 / np.mean(np.abs(y / g - desired) ** 2)
        worst = max(worst, abs(mc / rec.sinr_linear - 1))
    assert record(7, worst < 0.01, f"max relative SINR deviation {worst:.2%} over 10 networks")


# -- 8: power control ------------------------------------------------------------------------------

def test_criterion_8_power_control_examples():
    cfg = UplinkPowerConfig()
    gain = lambda L: 10.0 ** (-np.asarray(L, dtype=float) / 10)
    a = float(mw_to_dbm(ul_tx_power(cfg, gain(100.0))))
    b = float(mw_to_dbm(ul_tx_power(cfg, gain(170.0))))
    c = mw_to_dbm(ul_tx_power(UplinkPowerConfig(alpha=0.0), gain([60.0, 120.0, 180.0])))
    L = np.linspace(40.0, 250.0, 2001)
    p = ul_tx_power(cfg, gain(L))
    mono = bool(np.all(np.diff(p) >= 0))
    ok = abs(a + 8) < 1e-12 and abs(b - 23) < 1e-12 and np.all(np.abs(c + 58) < 1e-12) and mono
    assert record(8, ok, f"L=100 -> {a:.2f} dBm; L=170 -> {b:.2f} dBm; alpha=0 -> {c[0]:.2f} dBm; "
                         f"non-decreasing: {mono}")


# -- 9: MCS endpoints ---------------------------------------------------------------------------------

def test_criterion_9_mcs():
    lo, hi = sinr_to_se(-5.02), sinr_to_se(25.87)
    x = np.linspace(-20, 40, 60001)
    mono = bool(np.all(np.diff(sinr_to_se(x)) >= 0))
    t = default_mcs_table()
    table_mono = bool(np.all(np.diff(t.thresholds_db) > 0) and np.all(np.diff(t.efficiency) > 0))
    ok = lo == 0.22 and hi == 7.44 and mono and table_mono
    assert record(9, ok, f"-5.02 dB -> {lo}; 25.87 dB -> {hi}; staircase monotone: {mono and table_mono}")


# -- 10: determinism ------------------------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    same = []
    for mode, csi, drops in (("su", "perfect", 4), ("mu", "r3pc", 2)):
        cfg = C.ExperimentConfig().with_(experiment={"mode": mode, "csi": csi, "drops": drops,
                                                     "master_seed": 2024})
        blobs = []
        for run, workers in enumerate((1, 1, 2, 3)):
            s = run_experiment(cfg.with_(experiment={"workers": workers}))
            blobs.append(emit_outputs(s, tmp_path / f"{mode}{run}")["rates.csv"].read_bytes())
        same.append(all(b == blobs[0] for b in blobs))
    assert record(10, all(same), "rates.csv byte-identical across reruns and 1/2/3 workers "
                                 f"(su: {same[0]}, mu r3pc: {same[1]})")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
