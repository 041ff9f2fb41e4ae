"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance
criteria" section of the terminal summary.
"""

import json
import os
import time
from math import gcd
from pathlib import Path

import numpy as np
import pytest

from oracles import coprime_pairs, masked_pair_average, pair_counts

from coprime_psd import (
    CoprimeScheme,
    LagWindow,
    apply_sampling,
    direct_autocorr_oracle,
    estimate,
    sensing_autocorr,
    sensing_vector,
)
from coprime_psd.cli import main, replay
from coprime_psd.estimator import capture_autocorr
from coprime_psd.evaluation import (
    SweepConfig,
    default_lag_window,
    detect_peaks,
    detection_rate,
    loglog_slope,
    monte_carlo_sweep,
    occupied_band,
    time_benchmark,
)
from coprime_psd.siggen import preset, render_scenario, scenario_from_dict

WORKERS = min(4, os.cpu_count() or 1)
SWEEP_SCHEME = CoprimeScheme(3, 4, 300, 1, 32e9)
SNR_GRID = [-10.0, -6.0, -2.0, 0.0, 5.0, 10.0]
P_GRID = [50, 100, 300, 1000]
DELAYS = [0, 1000, 100000]


def _report(record, label, passed, detail):
    record(label, passed, detail)
    print(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
    assert passed, f"{label}: {detail}"


def _random_scheme(g, max_N):
    while True:
        r0, r1 = sorted(g.choice(np.arange(1, 24), size=2, replace=False).tolist())
        if gcd(r0, r1) != 1:
            continue
        max_pq = max_N // (r0 * r1)
        if max_pq < 2:
            continue
        p = int(g.integers(1, max_pq))
        q = int(g.integers(1, max_pq - p + 1))
        return CoprimeScheme(r0, r1, p, q, 1.0)


def test_oracle_equivalence(record_acceptance):
    g = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        s = _random_scheme(g, 4096)
        x = g.standard_normal(s.N) + 1j * g.standard_normal(s.N)
        y = apply_sampling(x, sensing_vector(s)).y
        w = LagWindow.from_lags(int(g.integers(1, s.N + 1)), s.fs)
        fast = capture_autocorr(y, w).values
        ref = direct_autocorr_oracle(y, w).values
        worst = max(worst, np.linalg.norm(fast - ref) / np.linalg.norm(ref))
    elapsed = time.perf_counter() - t0
    _report(record_acceptance, "1 oracle equivalence", worst <= 1e-9 and elapsed < 30,
            f"max rel err {worst:.2e} (<=1e-9), {elapsed:.1f}s (<30s)")


def test_pair_count_exactness(record_acceptance):
    t0 = time.perf_counter()
    n_schemes, bad = 0, []
    for r0, r1 in coprime_pairs(35):
        for p in range(1, 6):
            for q in range(1, 7 - p):
                s = CoprimeScheme(r0, r1, p, q, 1.0)
                ra = sensing_autocorr(s, LagWindow.from_lags(s.N, 1.0))
                expected = pair_counts(np.flatnonzero(sensing_vector(s).a))
                exp_vec = np.array([expected.get(int(m), 0) for m in ra.lags])
                n_schemes += 1
                # the stored values must be exactly count / N, not merely round to it
                if not (np.array_equal(ra.counts, exp_vec) and np.array_equal(ra.values, exp_vec / s.N)):
                    bad.append((r0, r1, p, q))
    elapsed = time.perf_counter() - t0
    _report(record_acceptance, "2 pair-count exactness", not bad and elapsed < 10,
            f"{n_schemes} schemes, {len(bad)} mismatches, {elapsed:.1f}s (<10s)")


def test_factorization(record_acceptance):
    g = np.random.default_rng(99)
    t0 = time.perf_counter()
    worst, cases = 0.0, 0
    while cases < 100:
        s = _random_scheme(g, 256)
        x = g.standard_normal(s.N) + 1j * g.standard_normal(s.N)
        pos = np.flatnonzero(sensing_vector(s).a).tolist()
        w = LagWindow.from_lags(s.N, s.fs)
        ry = capture_autocorr(apply_sampling(x, sensing_vector(s)).y, w)
        ra = sensing_autocorr(s, w)
        for i, m in enumerate(w.lags):
            avg = masked_pair_average(x, pos, int(m))
            predicted = 0.0 if avg is None else ra.values[i] * avg[0]
            worst = max(worst, abs(ry.values[i] - predicted))
        cases += 1
    elapsed = time.perf_counter() - t0
    _report(record_acceptance, "3 factorization", worst <= 1e-12 and elapsed < 5,
            f"{cases} instances, max abs err {worst:.2e} (<=1e-12), {elapsed:.1f}s (<5s)")


def _run_preset(name):
    d = preset(name)
    scheme = CoprimeScheme.from_dict(d.pop("scheme"))
    t0 = time.perf_counter()
    scn = scenario_from_dict(d, scheme)
    frame = render_scenario(scn, scheme)
    res = estimate(frame, scheme, default_lag_window(scheme))
    return scn, res.spectrum, time.perf_counter() - t0


def test_multitone_detection(record_acceptance):
    scn, spec, elapsed = _run_preset("tones50")
    rate = detection_rate(scn.frequencies, detect_peaks(spec), spec, tol_bins=1)
    _report(record_acceptance, "4a 50 tones", rate >= 0.95 and elapsed < 60,
            f"{rate:.0%} within +-1 bin (>=95%), {elapsed:.1f}s (<60s)")


def test_bpsk_localization(record_acceptance):
    scn, spec, elapsed = _run_preset("bpsk20")
    rate = detection_rate(scn.frequencies, detect_peaks(spec), spec, tol_bins=2)
    _report(record_acceptance, "4b 20 BPSK carriers", rate >= 0.90 and elapsed < 60,
            f"{rate:.0%} within +-2 bins (>=90%), {elapsed:.1f}s (<60s)")


def test_lfm_occupied_band(record_acceptance):
    scn, spec, elapsed = _run_preset("chirps2")
    lo, hi = occupied_band(spec)
    # the up-chirp covers 4-14 GHz and the down-chirp 6-16 GHz
    err = max(abs(lo - 4e9), abs(hi - 16e9)) / spec.fs
    _report(record_acceptance, "4c 2 LFM chirps", err <= 0.02 and elapsed < 60,
            f"edges {lo / 1e9:.3f}-{hi / 1e9:.3f} GHz, max err {err:.2%} of fs (<=2%), {elapsed:.1f}s (<60s)")


def _sweep(axis, values, snr_db):
    cfg = SweepConfig(axis, values, SWEEP_SCHEME, trials=100,
                      scenario={"kind": "mp", "count": 18, "snr_db": snr_db},
                      base_seed=0, workers=WORKERS)
    t0 = time.perf_counter()
    result = monte_carlo_sweep(cfg)
    return np.array([r.rmse for r in result.rows]), sum(r.failed for r in result.rows), time.perf_counter() - t0


def test_snr_trend(record_acceptance):
    rmse, failed, elapsed = _sweep("snr_db", SNR_GRID, 0.0)
    inversions = int(np.sum(np.diff(rmse) > 0))
    ratio = rmse[SNR_GRID.index(0.0)] / rmse[SNR_GRID.index(10.0)]
    ok = inversions <= 1 and ratio <= 2 and elapsed < 600 and failed == 0
    _report(record_acceptance, "5 RMSE vs SNR", ok,
            f"rmse {np.array2string(rmse, precision=5)}, {inversions} inversions (<=1), "
            f"0dB/10dB {ratio:.3f} (<=2), {elapsed:.0f}s (<600s)")


def test_p_trend(record_acceptance):
    rmse, failed, elapsed = _sweep("p", P_GRID, 0.0)
    ok = bool(np.all(np.diff(rmse) <= 0)) and elapsed < 600 and failed == 0
    _report(record_acceptance, "6 RMSE vs p", ok,
            f"rmse {np.array2string(rmse, precision=5)} non-increasing, {elapsed:.0f}s (<600s)")


def test_timing(record_acceptance):
    t0 = time.perf_counter()
    at_1000 = time_benchmark([1000], lag_fraction=0.1)[0]
    grid = [100, 300, 1000, 3000, 10000]
    rows = time_benchmark(grid, lag_fraction=0.1, oracle=False)
    slope = loglog_slope(grid, [r.fast_s for r in rows])
    elapsed = time.perf_counter() - t0
    ok = at_1000.speedup >= 5 and slope < 1.3 and elapsed < 300
    _report(record_acceptance, "7 timing", ok,
            f"speedup at p=1000 {at_1000.speedup:.1f}x (>=5x), slope {slope:.3f} (<1.3), {elapsed:.0f}s (<300s)")


def test_delay_robustness(record_acceptance):
    rmse, failed, elapsed = _sweep("delay_samples", DELAYS, 5.0)
    ratio = rmse.max() / rmse.min()
    ok = ratio < 1.5 and elapsed < 600 and failed == 0
    _report(record_acceptance, "8 RMSE vs delay", ok,
            f"rmse {np.array2string(rmse, precision=5)}, max/min {ratio:.3f} (<1.5), {elapsed:.0f}s (<600s)")


def test_determinism(record_acceptance, tmp_path):
    scn = tmp_path / "scn.json"
    scn.write_text(json.dumps({
        "seed": 8,
        "random": [{"type": "mp", "count": 5, "band_hz": [2e9, 18e9]},
                   {"type": "bpsk", "count": 2, "band_hz": [2e9, 18e9], "symbol_rate_hz": 1e8}],
        "components": [{"type": "lfm", "f_start_hz": 3e9, "bandwidth_hz": 2e9}],
        "noise": {"snr_db": 5.0},
    }))
    sweep_cfg = tmp_path / "sweep.json"
    sweep_cfg.write_text(json.dumps({"axis": "snr_db", "values": [0, 10], "trials": 5,
                                     "scenario": {"count": 4}}))
    small = ["-p", "40"]
    runs = [
        ["gen", "--scenario", str(scn), "-o", str(tmp_path / "frame.bin"), *small],
        ["estimate", "--frame", str(tmp_path / "frame.bin"), "-o", str(tmp_path / "est_frame.csv"),
         "--json", "--autocorr"],
        ["estimate", "--scenario", str(scn), "-o", str(tmp_path / "est_scn.csv"), "--fast-fft", *small],
        ["estimate", "--preset", "mixed", "-o", str(tmp_path / "est_preset.csv"), "--delta-f", "2e7"],
        ["sweep", str(sweep_cfg), "-o", str(tmp_path / "sweep.csv"), *small],
        ["positions", "-o", str(tmp_path / "pos.txt")],
    ]
    checked, mismatches = 0, []
    for argv in runs:
        assert main(argv) == 0, argv
        out = Path(argv[argv.index("-o") + 1])
        mpath = out.with_name(out.stem + ".manifest.json")
        _, bad = replay(mpath, tmp_path / "replay" / out.stem)
        for o in json.loads(mpath.read_text())["outputs"]:
            if o["kind"] != "data":
                continue
            again = tmp_path / "replay" / out.stem / Path(o["path"]).name
            checked += 1
            if again.read_bytes() != Path(o["path"]).read_bytes():
                mismatches.append(again.name)
        mismatches.extend(bad)
    _report(record_acceptance, "9 determinism", checked > 0 and not mismatches,
            f"{checked} data outputs over {len(runs)} commands, {len(mismatches)} differ")
