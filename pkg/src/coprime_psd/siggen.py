"""Nyquist-rate test signals: tones, BPSK carriers, LFM chirps, and noise.

All generators produce complex (analytic) frames so that any band inside
``[0, fs)`` is representable without aliasing.  For a real-valued capture,
a tone at ``f`` shows up at ``fold_frequency(f, fs)`` and its mirror.

Generators take a ``start`` sample offset; ``apply_delay`` uses it to model
an unknown time offset between the signal and the sampler's sensing mask.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import (
    ConfigError,
    FrequencyOutOfBandError,
    SweepOutOfBandError,
    SymbolRateTooHighError,
    ZeroSignalPowerError,
)
from .scheme import CoprimeScheme, NyquistFrame

__all__ = [
    "MPSpec",
    "BPSKSpec",
    "LFMSpec",
    "NoiseSpec",
    "Scenario",
    "gen_mp",
    "gen_bpsk",
    "gen_lfm",
    "add_awgn",
    "apply_delay",
    "fold_frequency",
    "random_frequencies",
    "scenario_from_dict",
    "render_components",
    "render_scenario",
    "PRESETS",
    "preset",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MPSpec:
    """Mono-frequency component ``A*exp(j(2*pi*f*n/fs + phase))``."""

    freq: float
    amplitude: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class BPSKSpec:
    """Carrier with rectangular phase flips; bit 1 flips the sign."""

    carrier: float
    symbol_rate: float
    code: tuple = (0,)
    amplitude: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class LFMSpec:
    """Linear chirp from ``f_start`` to ``f_start + bandwidth`` over ``duration``.

    A negative bandwidth gives a down-chirp.  ``duration=None`` means one
    sweep per frame; shorter durations repeat the sweep.
    """

    f_start: float
    bandwidth: float
    duration: float | None = None
    amplitude: float = 1.0
    phase: float = 0.0


SignalSpec = Union[MPSpec, BPSKSpec, LFMSpec]


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int = 0


def _sample_index(scheme: CoprimeScheme, start: int) -> np.ndarray:
    return np.arange(start, start + scheme.N, dtype=np.int64)


def _tone_phase(freq: float, fs: float, n: np.ndarray) -> np.ndarray:
    # reduce cycles mod 1 before scaling so large offsets keep full precision
    cycles = np.mod((freq / fs) * n, 1.0)
    return TWO_PI * cycles


def _check_band(freq: float, fs: float) -> None:
    if not 0.0 <= freq < fs:
        raise FrequencyOutOfBandError(f"frequency {freq!r} Hz outside [0, {fs!r})")


def fold_frequency(freq: float, fs: float) -> float:
    """Where a real-valued tone at ``freq`` appears within ``[0, fs/2]``."""
    f = math.fmod(freq, fs)
    if f < 0:
        f += fs
    return min(f, fs - f)


def gen_mp(specs: MPSpec | Iterable[MPSpec], scheme: CoprimeScheme, start: int = 0,
           real: bool = False) -> NyquistFrame:
    if isinstance(specs, MPSpec):
        specs = [specs]
    fs = scheme.fs
    n = _sample_index(scheme, start)
    x = np.zeros(scheme.N, dtype=np.complex128)
    for s in specs:
        _check_band(s.freq, fs)
        ph = _tone_phase(s.freq, fs, n) + s.phase
        x += s.amplitude * (np.cos(ph) if real else np.exp(1j * ph))
    return NyquistFrame(x, fs)


def gen_bpsk(specs: BPSKSpec | Iterable[BPSKSpec], scheme: CoprimeScheme, start: int = 0) -> NyquistFrame:
    """BPSK carriers with symbol boundaries snapped to the nearest sample.

    The code is repeated if the frame spans more symbols than it holds.
    """
    if isinstance(specs, BPSKSpec):
        specs = [specs]
    fs = scheme.fs
    n = _sample_index(scheme, start)
    x = np.zeros(scheme.N, dtype=np.complex128)
    for s in specs:
        _check_band(s.carrier, fs)
        if not 0 < s.symbol_rate < fs:
            raise SymbolRateTooHighError(
                f"symbol rate {s.symbol_rate!r} must lie in (0, fs={fs!r})"
            )
        code = np.asarray(s.code, dtype=np.int64)
        if code.size == 0 or np.any((code != 0) & (code != 1)):
            raise ConfigError("BPSK code must be a nonempty sequence of 0/1 bits")
        sps = fs / s.symbol_rate
        sym = np.floor((n + 0.5) / sps).astype(np.int64)
        signs = 1.0 - 2.0 * code[sym % code.size]
        x += s.amplitude * signs * np.exp(1j * (_tone_phase(s.carrier, fs, n) + s.phase))
    return NyquistFrame(x, fs)


def gen_lfm(specs: LFMSpec | Iterable[LFMSpec], scheme: CoprimeScheme, start: int = 0) -> NyquistFrame:
    if isinstance(specs, LFMSpec):
        specs = [specs]
    fs = scheme.fs
    n = _sample_index(scheme, start)
    x = np.zeros(scheme.N, dtype=np.complex128)
    for s in specs:
        f_end = s.f_start + s.bandwidth
        if not (0.0 <= s.f_start < fs and 0.0 <= f_end <= fs):
            raise SweepOutOfBandError(
                f"sweep {s.f_start!r} -> {f_end!r} Hz leaves [0, fs={fs!r})"
            )
        T = s.duration if s.duration is not None else scheme.N / fs
        if not T > 0:
            raise ConfigError(f"LFM duration must be positive, got {T!r}")
        # work in samples: tau in [0, T*fs)
        period = T * fs
        tau = np.mod(n.astype(np.float64), period)
        cycles = (s.f_start / fs) * tau + (s.bandwidth / (2.0 * period * fs)) * tau**2
        x += s.amplitude * np.exp(1j * (TWO_PI * np.mod(cycles, 1.0) + s.phase))
    return NyquistFrame(x, fs)


def add_awgn(frame: NyquistFrame, noise: NoiseSpec | None) -> NyquistFrame:
    """Add circular complex Gaussian noise at an exact realized SNR.

    The noise draw is rescaled so its sample power equals
    ``P_signal / 10**(snr_db/10)`` with both powers measured on this frame.
    ``noise=None`` or ``snr_db=inf`` returns the frame unchanged.
    """
    if noise is None or (math.isinf(noise.snr_db) and noise.snr_db > 0):
        return frame
    ps = frame.power
    if ps == 0.0:
        raise ZeroSignalPowerError("cannot calibrate SNR against a zero-power frame")
    rng = np.random.default_rng(noise.seed)
    w = rng.standard_normal(len(frame)) + 1j * rng.standard_normal(len(frame))
    target = ps / 10.0 ** (noise.snr_db / 10.0)
    w *= np.sqrt(target / np.mean(np.abs(w) ** 2))
    return NyquistFrame(frame.x + w, frame.fs)


def apply_delay(generator: Callable[[int], NyquistFrame], delay_samples: int) -> NyquistFrame:
    """Frame of ``x[n + d]``; the sensing mask is left where it was."""
    d = int(delay_samples)
    if d < 0 or d != delay_samples:
        raise ValueError(f"delay must be a nonnegative integer, got {delay_samples!r}")
    return generator(d)


def random_frequencies(rng: np.random.Generator, count: int, band: Sequence[float],
                       min_separation: float = 0.0, max_tries: int = 1000) -> np.ndarray:
    """Uniform draws in ``band`` with an optional minimum pairwise spacing."""
    lo, hi = float(band[0]), float(band[1])
    if not hi > lo:
        raise ConfigError(f"band must be increasing, got {band!r}")
    if min_separation <= 0:
        return rng.uniform(lo, hi, size=count)
    freqs: list[float] = []
    for _ in range(count):
        for _ in range(max_tries):
            f = rng.uniform(lo, hi)
            if all(abs(f - g) >= min_separation for g in freqs):
                freqs.append(f)
                break
        else:
            raise ConfigError(
                f"could not place {count} tones {min_separation} Hz apart in {band!r}"
            )
    return np.array(freqs)


# -- scenarios -----------------------------------------------------------------

@dataclass
class Scenario:
    """Signal components plus noise and delay, ready to render."""

    components: list = field(default_factory=list)
    noise: NoiseSpec | None = None
    delay_samples: int = 0

    @property
    def frequencies(self) -> np.ndarray:
        """Tone and carrier frequencies (LFMs excluded)."""
        out = []
        for c in self.components:
            if isinstance(c, MPSpec):
                out.append(c.freq)
            elif isinstance(c, BPSKSpec):
                out.append(c.carrier)
        return np.array(out)


def _component(d: dict, rng: np.random.Generator, scheme: CoprimeScheme, delay: int) -> SignalSpec:
    kind = d.get("type")
    amp = float(d.get("amplitude", 1.0))
    phase = float(d["phase_rad"]) if "phase_rad" in d else float(rng.uniform(0.0, TWO_PI))
    try:
        if kind == "mp":
            return MPSpec(float(d["freq_hz"]), amp, phase)
        if kind == "bpsk":
            rate = float(d["symbol_rate_hz"])
            if "code" in d:
                code = tuple(int(b) for b in d["code"])
            else:
                if not 0 < rate < scheme.fs:
                    raise SymbolRateTooHighError(f"symbol rate {rate!r} must lie in (0, fs)")
                n_sym = math.ceil((scheme.N + delay) * rate / scheme.fs) + 1
                code = tuple(int(b) for b in rng.integers(0, 2, size=n_sym))
            return BPSKSpec(float(d["carrier_hz"]), rate, code, amp, phase)
        if kind == "lfm":
            dur = d.get("duration_s")
            return LFMSpec(float(d["f_start_hz"]), float(d["bandwidth_hz"]),
                           None if dur is None else float(dur), amp, phase)
    except KeyError as exc:
        raise ConfigError(f"{kind} component is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown component type {kind!r}")


def scenario_from_dict(d: dict, scheme: CoprimeScheme, seed: int | None = None) -> Scenario:
    """Expand a scenario description into concrete component specs.

    ``components`` lists explicit specs; ``random`` entries draw ``count``
    components uniformly within ``band_hz``.  Missing phases and BPSK codes
    are drawn from ``seed`` (default ``d["seed"]``, else 0), in order.
    """
    seed = int(d.get("seed", 0)) if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    delay = int(d.get("delay_samples", 0))
    raw = [dict(c) for c in d.get("components", [])]
    for block in d.get("random", []):
        block = dict(block)
        kind = block.pop("type", "mp")
        count = int(block.pop("count"))
        band = block.pop("band_hz", [0.0, scheme.fs])
        sep = float(block.pop("min_separation_hz", 0.0))
        key = {"mp": "freq_hz", "bpsk": "carrier_hz"}.get(kind)
        if key is None:
            raise ConfigError(f"random blocks support mp and bpsk, got {kind!r}")
        for f in random_frequencies(rng, count, band, sep):
            raw.append({"type": kind, key: float(f), **block})
    if not raw:
        raise ConfigError("scenario has no signal components")
    components = [_component(c, rng, scheme, delay) for c in raw]
    noise = None
    if d.get("noise") is not None:
        nd = d["noise"]
        nseed = int(nd["seed"]) if "seed" in nd else int(rng.integers(0, 2**63 - 1))
        noise = NoiseSpec(float(nd["snr_db"]), nseed)
    return Scenario(components, noise, delay)


def render_components(components: Sequence[SignalSpec], scheme: CoprimeScheme, start: int) -> NyquistFrame:
    x = np.zeros(scheme.N, dtype=np.complex128)
    mp = [c for c in components if isinstance(c, MPSpec)]
    bpsk = [c for c in components if isinstance(c, BPSKSpec)]
    lfm = [c for c in components if isinstance(c, LFMSpec)]
    if mp:
        x += gen_mp(mp, scheme, start).x
    if bpsk:
        x += gen_bpsk(bpsk, scheme, start).x
    if lfm:
        x += gen_lfm(lfm, scheme, start).x
    return NyquistFrame(x, scheme.fs)


def render_scenario(scenario: Scenario, scheme: CoprimeScheme) -> NyquistFrame:
    frame = apply_delay(lambda s: render_components(scenario.components, scheme, s),
                        scenario.delay_samples)
    return add_awgn(frame, scenario.noise)


# -- built-in wideband scenarios: 3:4 sampler at 32 GHz, 15 dB SNR ------------

_BAND = [2e9, 18e9]
_WIDEBAND_SCHEME = {"r0": 3, "r1": 4, "p": 3000, "q": 1, "fs_hz": 32e9}

PRESETS = {
    "tones50": {
        "scheme": _WIDEBAND_SCHEME, "seed": 1,
        "random": [{"type": "mp", "count": 50, "band_hz": _BAND}],
        "noise": {"snr_db": 15.0},
    },
    "bpsk20": {
        "scheme": _WIDEBAND_SCHEME, "seed": 2,
        "random": [{"type": "bpsk", "count": 20, "band_hz": _BAND, "symbol_rate_hz": 1e6}],
        "noise": {"snr_db": 15.0},
    },
    "chirps2": {
        "scheme": _WIDEBAND_SCHEME, "seed": 3,
        "components": [
            {"type": "lfm", "f_start_hz": 4e9, "bandwidth_hz": 10e9},
            {"type": "lfm", "f_start_hz": 16e9, "bandwidth_hz": -10e9},
        ],
        "noise": {"snr_db": 15.0},
    },
    "mixed": {
        "scheme": _WIDEBAND_SCHEME, "seed": 4,
        "components": [{"type": "lfm", "f_start_hz": 12e9, "bandwidth_hz": 4e9}],
        "random": [
            {"type": "mp", "count": 10, "band_hz": _BAND},
            {"type": "bpsk", "count": 10, "band_hz": _BAND, "symbol_rate_hz": 1e6},
        ],
        "noise": {"snr_db": 15.0},
    },
}


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
