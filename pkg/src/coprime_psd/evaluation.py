"""Peak readout, relative RMSE scoring, Monte Carlo sweeps and timing runs."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.fft import next_fast_len

from .errors import ConfigError, CoprimePSDError, EmptyTrialsError
from .estimator import (
    LagWindow,
    PowerSpectrum,
    direct_estimate,
    estimate,
    sensing_autocorr,
)
from .scheme import CoprimeScheme, apply_sampling, sensing_vector
from .siggen import (
    BPSKSpec,
    MPSpec,
    NoiseSpec,
    render_components,
    add_awgn,
    apply_delay,
    random_frequencies,
)

__all__ = [
    "PeakSet",
    "TrialResult",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "TimingRow",
    "default_lag_window",
    "detect_peaks",
    "match_errors",
    "detection_rate",
    "occupied_band",
    "relative_rmse",
    "run_trial",
    "monte_carlo_sweep",
    "time_benchmark",
    "loglog_slope",
]

AXES = ("snr_db", "p", "delay_samples")
MAX_DEFAULT_M = 4097
MAD_FACTOR = 6.0


def default_lag_window(scheme: CoprimeScheme, delta_f: float | None = None) -> LagWindow:
    """Lag window for a scheme; ``M = min(N // 4, 4097)`` unless ``delta_f`` is set."""
    if delta_f is not None:
        return LagWindow.from_resolution(scheme.fs, delta_f)
    return LagWindow.from_lags(max(1, min(scheme.N // 4, MAX_DEFAULT_M)), scheme.fs)


# -- peaks ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PeakSet:
    """Detected peaks, strongest first."""

    frequencies: np.ndarray
    magnitudes: np.ndarray
    bins: np.ndarray
    threshold: float

    def __len__(self) -> int:
        return self.bins.size


def detect_peaks(spectrum: PowerSpectrum, expected_count: int | None = None) -> PeakSet:
    """Strict local maxima above ``median + 6*MAD`` of the bin magnitudes.

    The spectrum is treated as circular.  With ``expected_count`` the
    strongest ``expected_count`` peaks are kept; otherwise every peak above
    the threshold is returned, so no prior knowledge of the number of
    inputs is needed.  Equal magnitudes are ordered by bin index.
    """
    mags = np.asarray(spectrum.magnitudes, dtype=np.float64)
    if mags.size == 0:
        raise ValueError("empty spectrum")
    med = float(np.median(mags))
    mad = float(np.median(np.abs(mags - med)))
    thr = med + MAD_FACTOR * mad
    if mags.size >= 3:
        is_max = (mags > np.roll(mags, 1)) & (mags > np.roll(mags, -1))
    else:
        is_max = mags == mags.max()
        if mags.size == 2 and mags[0] == mags[1]:
            is_max[:] = False
    idx = np.flatnonzero(is_max & (mags > thr))
    order = np.lexsort((idx, -mags[idx]))
    idx = idx[order]
    if expected_count is not None:
        idx = idx[: int(expected_count)]
    return PeakSet(idx * spectrum.bin_width, mags[idx], idx, thr)


def _circular_distance(a, b, fs: float) -> np.ndarray:
    d = np.mod(np.abs(np.asarray(a) - np.asarray(b)), fs)
    return np.minimum(d, fs - d)


def match_errors(true_freqs, est_freqs, fs: float) -> np.ndarray:
    """Per-truth frequency error against the nearest estimate.

    Distances wrap modulo ``fs``, so no error exceeds ``fs/2``; a truth
    with no estimate at all is charged that ``fs/2`` cap.
    """
    truth = np.asarray(true_freqs, dtype=np.float64)
    est = np.asarray(est_freqs, dtype=np.float64)
    if est.size == 0:
        return np.full(truth.shape, fs / 2.0)
    if truth.size == 0:
        return np.empty(0)
    return _circular_distance(truth[:, None], est[None, :], fs).min(axis=1)


def detection_rate(true_freqs, peaks: PeakSet, spectrum: PowerSpectrum, tol_bins: int = 1) -> float:
    """Fraction of true frequencies with a detected peak within ``tol_bins`` bins."""
    truth = np.asarray(true_freqs, dtype=np.float64)
    if truth.size == 0:
        return 1.0
    if len(peaks) == 0:
        return 0.0
    n = spectrum.n_bins
    tb = spectrum.bin_of(truth)
    d = np.abs(np.atleast_1d(tb)[:, None] - peaks.bins[None, :]) % n
    d = np.minimum(d, n - d)
    return float(np.mean(d.min(axis=1) <= tol_bins))


def occupied_band(spectrum: PowerSpectrum, rel_threshold_db: float = -10.0,
                  smooth_bins: int = 101, reference_percentile: float = 95.0) -> tuple[float, float]:
    """Edges of the widest contiguous band above a relative threshold.

    The magnitude is smoothed with a circular moving average of
    ``smooth_bins`` bins; the threshold is ``rel_threshold_db`` below the
    ``reference_percentile`` of the smoothed values, which is less
    sensitive to isolated spurs than the maximum.  Returns
    ``(low_edge_hz, high_edge_hz)``; the band may wrap through 0.
    """
    mags = np.asarray(spectrum.magnitudes, dtype=np.float64)
    n = mags.size
    k = min(max(1, int(smooth_bins)), n)
    if k > 1:
        padded = np.concatenate([mags[n - k // 2:], mags, mags[: k - 1 - k // 2]])
        mags = np.convolve(padded, np.ones(k) / k, mode="valid")
    thr = np.percentile(mags, reference_percentile) * 10.0 ** (rel_threshold_db / 20.0)
    above = mags >= thr
    if above.all():
        return 0.0, float(spectrum.fs - spectrum.bin_width)
    # rotate so bin 0 is below threshold and no run wraps around
    shift = int(np.argmin(above))
    r = np.roll(above, -shift).astype(np.int8)
    d = np.diff(np.concatenate([[0], r, [0]]))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    best = int(np.argmax(ends - starts))
    lo, hi = (starts[best] + shift) % n, (ends[best] + shift) % n
    return float(lo * spectrum.bin_width), float(hi * spectrum.bin_width)


# -- scoring -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrialResult:
    index: int
    true_freqs: np.ndarray
    est_freqs: np.ndarray
    sq_errors: np.ndarray
    wall_time: float

    @classmethod
    def from_estimates(cls, index: int, true_freqs, est_freqs, fs: float,
                       wall_time: float = 0.0) -> "TrialResult":
        truth = np.asarray(true_freqs, dtype=np.float64)
        est = np.asarray(est_freqs, dtype=np.float64)
        err = match_errors(truth, est, fs)
        return cls(index, truth, est, err**2, wall_time)


def relative_rmse(trials: Sequence[TrialResult], fs: float) -> float:
    """``(1/fs) * sqrt(mean squared frequency error)`` over all trials and inputs."""
    trials = list(trials)
    if not trials:
        raise EmptyTrialsError("no trials to score")
    sq = np.concatenate([t.sq_errors for t in trials])
    if sq.size == 0:
        raise EmptyTrialsError("trials contain no true frequencies")
    return math.sqrt(float(np.sum(sq)) / sq.size) / fs


# -- Monte Carlo sweeps --------------------------------------------------------

DEFAULT_SCENARIO = {
    "kind": "mp",
    "count": 18,
    "band_hz": [2e9, 18e9],
    "snr_db": 0.0,
    "delay_samples": 0,
    "min_separation_hz": 0.0,
    "symbol_rate_hz": 1e6,
}


@dataclass
class SweepConfig:
    """One-axis Monte Carlo sweep.

    ``scenario`` keys (defaults in ``DEFAULT_SCENARIO``): ``kind`` ("mp" or
    "bpsk"), ``count``, ``band_hz``, ``snr_db``, ``delay_samples``,
    ``min_separation_hz`` and ``symbol_rate_hz``.  The swept axis overrides
    the matching scenario or scheme value.  Trial ``j`` at every grid point
    uses seed ``base_seed + j``.
    """

    axis: str
    values: list
    scheme: CoprimeScheme
    trials: int = 100
    scenario: dict = field(default_factory=dict)
    delta_f: float | None = None
    base_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; choose from {AXES}")
        if not len(self.values):
            raise ConfigError("sweep grid is empty")
        if int(self.trials) < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials!r}")
        unknown = set(self.scenario) - set(DEFAULT_SCENARIO)
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        if self.scenario.get("kind", "mp") not in ("mp", "bpsk"):
            raise ConfigError(f"sweep scenarios support mp and bpsk, got {self.scenario['kind']!r}")
        self.values = list(self.values)
        self.trials = int(self.trials)

    def resolved_scenario(self) -> dict:
        return {**DEFAULT_SCENARIO, **self.scenario}

    def point(self, value) -> tuple[CoprimeScheme, dict]:
        scheme, scn = self.scheme, self.resolved_scenario()
        if self.axis == "p":
            scheme = scheme.replace(p=int(value))
        elif self.axis == "snr_db":
            scn["snr_db"] = float(value)
        else:
            scn["delay_samples"] = int(value)
        return scheme, scn

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "values": self.values,
            "trials": self.trials,
            "scheme": self.scheme.to_dict(),
            "scenario": self.resolved_scenario(),
            "delta_f_hz": self.delta_f,
            "base_seed": self.base_seed,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = {"axis", "values", "trials", "scheme", "scenario", "delta_f_hz", "base_seed",
                 "workers", "mode"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sweep config keys: {sorted(unknown)}")
        try:
            return cls(
                axis=d["axis"],
                values=d["values"],
                scheme=CoprimeScheme.from_dict(d["scheme"]),
                trials=d.get("trials", 100),
                scenario=dict(d.get("scenario", {})),
                delta_f=d.get("delta_f_hz"),
                base_seed=int(d.get("base_seed", 0)),
                workers=int(d.get("workers", 1)),
            )
        except KeyError as exc:
            raise ConfigError(f"sweep config is missing {exc.args[0]!r}") from None


def _trial_components(rng: np.random.Generator, scn: dict, scheme: CoprimeScheme):
    count = int(scn["count"])
    freqs = random_frequencies(rng, count, scn["band_hz"], float(scn["min_separation_hz"]))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    if scn["kind"] == "mp":
        comps = [MPSpec(float(f), 1.0, float(ph)) for f, ph in zip(freqs, phases)]
    else:
        rate = float(scn["symbol_rate_hz"])
        n_sym = math.ceil((scheme.N + int(scn["delay_samples"])) * rate / scheme.fs) + 1
        comps = [BPSKSpec(float(f), rate, tuple(int(b) for b in rng.integers(0, 2, n_sym)), 1.0, float(ph))
                 for f, ph in zip(freqs, phases)]
    noise_seed = int(rng.integers(0, 2**63 - 1))
    return freqs, comps, noise_seed


def run_trial(index: int, seed: int, scheme: CoprimeScheme, scn: dict, window: LagWindow,
              sensing=None) -> TrialResult:
    """Draw a random scenario, sense it, and score the detected peaks."""
    rng = np.random.default_rng(seed)
    freqs, comps, noise_seed = _trial_components(rng, scn, scheme)
    frame = apply_delay(lambda s: render_components(comps, scheme, s), int(scn["delay_samples"]))
    frame = add_awgn(frame, NoiseSpec(float(scn["snr_db"]), noise_seed))
    t0 = time.perf_counter()
    res = estimate(frame, scheme, window, sensing=sensing)
    peaks = detect_peaks(res.spectrum, len(freqs))
    elapsed = time.perf_counter() - t0
    return TrialResult.from_estimates(index, freqs, peaks.frequencies, scheme.fs, elapsed)


def _run_trial_safe(args):
    index = args[0]
    try:
        return run_trial(*args)
    except CoprimePSDError as exc:
        return index, f"{type(exc).__name__}: {exc}"


@dataclass
class SweepRow:
    axis_value: float
    rmse: float
    mean_time_s: float
    trials: int
    failed: int = 0


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list
    errors: list = field(default_factory=list)

    def table(self, timing: bool = True) -> list[dict]:
        out = []
        for r in self.rows:
            d = asdict(r)
            if not timing:
                d.pop("mean_time_s")
            out.append(d)
        return out


def monte_carlo_sweep(config: SweepConfig) -> SweepResult:
    """Run ``config.trials`` trials per grid value and aggregate the relative RMSE.

    Trials that raise a package error are counted as failed and excluded
    from the RMSE; the sweep only fails if every trial does.
    """
    rows, errors = [], []
    executor = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for value in config.values:
            scheme, scn = config.point(value)
            window = default_lag_window(scheme, config.delta_f)
            sensing = sensing_autocorr(scheme, window)
            jobs = [(j, config.base_seed + j, scheme, scn, window, sensing)
                    for j in range(config.trials)]
            results = list(executor.map(_run_trial_safe, jobs)) if executor else [
                _run_trial_safe(job) for job in jobs
            ]
            ok = [r for r in results if isinstance(r, TrialResult)]
            bad = [r for r in results if not isinstance(r, TrialResult)]
            errors.extend((value, j, msg) for j, msg in bad)
            rmse = relative_rmse(ok, scheme.fs) if ok else float("nan")
            mean_t = float(np.mean([r.wall_time for r in ok])) if ok else float("nan")
            rows.append(SweepRow(value, rmse, mean_t, len(results), len(bad)))
    finally:
        if executor is not None:
            executor.shutdown()
    if all(r.failed == r.trials for r in rows):
        raise CoprimePSDError(f"every trial failed; first error: {errors[0][2]}")
    return SweepResult(config, rows, errors)


# -- timing --------------------------------------------------------------------

@dataclass
class TimingRow:
    p: int
    N: int
    M: int
    fast_s: float
    oracle_s: float

    @property
    def speedup(self) -> float:
        return self.oracle_s / self.fast_s


def _median_time(fn, repeats: int, min_batch_s: float = 0.02) -> float:
    """Median over ``repeats`` samples of the per-call wall time of ``fn``.

    Calls shorter than ``min_batch_s`` are batched within each sample.
    """
    t0 = time.perf_counter()
    fn()
    single = time.perf_counter() - t0
    batch = max(1, int(min_batch_s / max(single, 1e-9)))
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(batch):
            fn()
        times.append((time.perf_counter() - t0) / batch)
    return float(np.median(times))


def time_benchmark(p_values: Sequence[int], r0: int = 3, r1: int = 4, q: int = 1, fs: float = 32e9,
                   lag_fraction: float = 0.1, repeats: int = 5, seed: int = 0,
                   oracle: bool = True, fast_fft_length: bool = False) -> list[TimingRow]:
    """Median wall time of the fast pipeline versus the direct lag-sum pipeline.

    Both run on the same capture (10 random tones at 0 dB) with the
    sensing autocorrelation precomputed, and ``M = lag_fraction * N``.
    ``fast_fft_length`` pads the capture transform to
    ``scipy.fft.next_fast_len(2N)`` instead of exactly ``2N``.  Runs are
    sequential.
    """
    rows = []
    for p in p_values:
        scheme = CoprimeScheme(r0, r1, int(p), q, fs)
        window = LagWindow.from_lags(max(1, int(lag_fraction * scheme.N)), fs)
        nfft = next_fast_len(2 * scheme.N) if fast_fft_length else None
        rng = np.random.default_rng(seed)
        comps = [MPSpec(float(f), 1.0, float(ph)) for f, ph in
                 zip(rng.uniform(fs / 16, fs * 9 / 16, 10), rng.uniform(0, 2 * np.pi, 10))]
        frame = add_awgn(render_components(comps, scheme, 0), NoiseSpec(0.0, int(rng.integers(2**32))))
        capture = apply_sampling(frame, sensing_vector(scheme))
        ra = sensing_autocorr(scheme, window)
        fast = _median_time(lambda: estimate(capture, scheme, window, sensing=ra, nfft=nfft), repeats)
        slow = (_median_time(lambda: direct_estimate(capture, scheme, window, sensing=ra), repeats)
                if oracle else float("nan"))
        rows.append(TimingRow(int(p), scheme.N, window.M, fast, slow))
    return rows


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])
