"""Fast autocorrelation and power spectrum reconstruction from coprime samples.

The masked observation ``y = a * x`` has autocorrelation ``r_y[m] = r_a[m] * r_x[m]``
where ``r_a`` is the autocorrelation of the binary sensing mask (``N*r_a[m]`` is
the number of sample pairs at lag ``m``) and ``r_x`` is the per-pair average of
the input.  Both ``r_y`` and ``r_a`` come out of one zero-padded FFT each, so the
input autocorrelation is their elementwise ratio and its FFT is the spectrum.

Pipeline::

    y ──pad to 2N──FFT──|.|²──IFFT──/N──keep lags |m|<M──┐
                                                         ├── r_y / r_a ──FFT──|.|── S
    a ──pad to 2N──FFT──|.|²──IFFT──/N──keep lags |m|<M──┘   (r_a cached offline)
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import (
    AllLagsUncoveredError,
    LagWindowMismatchError,
    LengthMismatchError,
    ShapeError,
    UncoveredLagError,
    WindowTooWideError,
)
from .scheme import (
    CoprimeScheme,
    NyquistFrame,
    SensingVector,
    SparseCapture,
    apply_sampling,
    sensing_vector,
)

__all__ = [
    "LagWindow",
    "AutocorrSeq",
    "PowerSpectrum",
    "EstimateResult",
    "zero_pad_double",
    "fft_autocorr",
    "truncate_lags",
    "sensing_autocorr",
    "capture_autocorr",
    "reconstruct_autocorr",
    "power_spectrum",
    "estimate",
    "direct_autocorr_oracle",
    "direct_estimate",
]

KINDS = ("sensing", "capture", "input")


@dataclass(frozen=True)
class LagWindow:
    """Lags ``-M+1 .. M-1`` retained for a target frequency resolution.

    ``M = ceil(fs/2/delta_f) + 1``.  Use :meth:`from_resolution` to derive
    ``M`` from ``delta_f`` or :meth:`from_lags` for the reverse.
    """

    M: int
    delta_f: float
    fs: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if self.fs <= 0:
            raise ValueError(f"fs must be positive, got {self.fs!r}")
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def from_resolution(cls, fs: float, delta_f: float) -> "LagWindow":
        if not delta_f > 0:
            raise ValueError(f"delta_f must be positive, got {delta_f!r}")
        ratio = fs / 2.0 / delta_f
        # the tolerance keeps from_lags -> from_resolution a round trip
        M = math.ceil(ratio - 1e-9 * max(1.0, ratio)) + 1
        return cls(M, float(delta_f), float(fs))

    @classmethod
    def from_lags(cls, M: int, fs: float) -> "LagWindow":
        delta_f = math.inf if M == 1 else fs / 2.0 / (M - 1)
        return cls(M, delta_f, float(fs))

    @property
    def n_lags(self) -> int:
        return 2 * self.M - 1

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.M + 1, self.M)


@dataclass(frozen=True, eq=False)
class AutocorrSeq:
    """Autocorrelation values in ascending-lag order over ``window.lags``.

    ``n`` is the frame length the sequence was normalized by.  For the
    ``input`` kind, ``coverage`` marks lags with at least one sample pair.
    """

    values: np.ndarray
    window: LagWindow
    kind: str
    n: int
    coverage: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.values.shape != (self.window.n_lags,):
            raise ShapeError(
                f"expected {self.window.n_lags} lag values, got shape {self.values.shape}"
            )

    @property
    def lags(self) -> np.ndarray:
        return self.window.lags

    def at(self, m: int):
        M = self.window.M
        if not -M < m < M:
            raise IndexError(f"lag {m} outside window |m| < {M}")
        return self.values[m + M - 1]

    @property
    def counts(self) -> np.ndarray:
        """Pair counts ``N*r_a[m]`` (sensing kind only)."""
        if self.kind != "sensing":
            raise TypeError("pair counts are defined for the sensing autocorrelation only")
        return np.rint(self.values.real * self.n).astype(np.int64)

    @property
    def uncovered_lags(self) -> np.ndarray:
        if self.coverage is None:
            return np.empty(0, dtype=np.int64)
        return self.lags[~self.coverage]


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    """Magnitude spectrum; bin ``i`` sits at ``i*fs/n_bins`` (modulo fs)."""

    magnitudes: np.ndarray
    fs: float

    @property
    def n_bins(self) -> int:
        return self.magnitudes.size

    @property
    def bin_width(self) -> float:
        return self.fs / self.n_bins

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_width

    def bin_of(self, f) -> np.ndarray | int:
        """Nearest bin index for frequency ``f`` (wrapped into [0, fs))."""
        b = np.rint(np.asarray(f) / self.bin_width).astype(np.int64) % self.n_bins
        return int(b) if b.ndim == 0 else b


@dataclass(frozen=True, eq=False)
class EstimateResult:
    spectrum: PowerSpectrum
    autocorr: AutocorrSeq
    coverage: np.ndarray

    @property
    def uncovered_lags(self) -> np.ndarray:
        return self.autocorr.lags[~self.coverage]


def zero_pad_double(v) -> np.ndarray:
    """Append ``len(v)`` zeros."""
    v = np.asarray(v)
    out = np.zeros(2 * v.size, dtype=v.dtype)
    out[: v.size] = v
    return out


def fft_autocorr(v2N, N: int, nfft: int | None = None) -> np.ndarray:
    """Full-length autocorrelation ``IFFT(|FFT(v2N)|^2) / N``.

    Positive lag ``m`` lands at index ``m`` and negative lag ``m`` at
    ``L + m`` where ``L`` is the transform length (``len(v2N)`` unless
    ``nfft`` asks for a longer one).  The second half of ``v2N`` must be
    zero so the circular correlation equals the linear one.
    """
    v = np.asarray(v2N)
    if v.size < 2 * N:
        raise ShapeError(f"need a zero-padded vector of length >= {2 * N}, got {v.size}")
    if np.any(v[N:]):
        raise ValueError("input is not zero-padded beyond the first N samples")
    L = v.size if nfft is None else int(nfft)
    if L < v.size:
        raise ShapeError(f"nfft={L} shorter than the padded input ({v.size})")
    if np.isrealobj(v):
        V = sfft.rfft(v, n=L)
        return sfft.irfft(V.real**2 + V.imag**2, n=L) / N
    V = sfft.fft(v, n=L)
    # |V|^2 is real, so its inverse transform is Hermitian: take the cheaper
    # real-input forward transform and mirror the upper half
    half = np.conj(sfft.rfft(V.real**2 + V.imag**2)) / (L * N)
    h = half.size
    out = np.empty(L, dtype=np.complex128)
    out[:h] = half
    out[h:] = np.conj(half[1 : L - h + 1][::-1])
    return out


def truncate_lags(rfull, window: LagWindow, N: int | None = None, kind: str = "capture") -> AutocorrSeq:
    """Keep lags ``-M+1 .. M-1`` of a full circular autocorrelation."""
    rfull = np.asarray(rfull)
    L = rfull.size
    N = L // 2 if N is None else N
    M = window.M
    if M > N:
        raise WindowTooWideError(f"M={M} exceeds the frame length N={N}")
    idx = np.concatenate([np.arange(L - M + 1, L), np.arange(M)])
    return AutocorrSeq(rfull[idx], window, kind, N)


def _sensing_counts_fft(scheme: CoprimeScheme, M: int) -> np.ndarray:
    sv = sensing_vector(scheme)
    N = scheme.N
    full = fft_autocorr(zero_pad_double(sv.a), N) * N
    L = full.size
    idx = np.concatenate([np.arange(L - M + 1, L), np.arange(M)])
    # pair counts are integers; rounding only strips FFT round-off
    return np.rint(full[idx]).astype(np.int64)


@functools.lru_cache(maxsize=64)
def _sensing_counts_memo(r0: int, r1: int, p: int, q: int, M: int) -> np.ndarray:
    counts = _sensing_counts_fft(CoprimeScheme(r0, r1, p, q, 1.0), M)
    counts.setflags(write=False)
    return counts


def sensing_autocorr(scheme: CoprimeScheme, window: LagWindow, cache=None) -> AutocorrSeq:
    """Autocorrelation of the sensing mask over the lag window.

    Depends only on the scheme, so it is computed once per
    ``(r0, r1, p, q, M)`` and optionally persisted through ``cache``
    (a :class:`coprime_psd.cache.SensingCache`).
    """
    if window.M > scheme.N:
        raise WindowTooWideError(f"M={window.M} exceeds the frame length N={scheme.N}")
    key = (scheme.r0, scheme.r1, scheme.p, scheme.q, window.M)
    counts = None
    if cache is not None:
        counts = cache.load(*key)
    if counts is None:
        counts = _sensing_counts_memo(*key)
        if cache is not None:
            cache.store(*key, counts)
    return AutocorrSeq(counts / scheme.N, window, "sensing", scheme.N)


def capture_autocorr(y, window: LagWindow, nfft: int | None = None) -> AutocorrSeq:
    y = np.asarray(y)
    N = y.size
    if window.M > N:
        raise WindowTooWideError(f"M={window.M} exceeds the frame length N={N}")
    return truncate_lags(fft_autocorr(zero_pad_double(y), N, nfft), window, N, "capture")


def reconstruct_autocorr(ry: AutocorrSeq, ra: AutocorrSeq, strict: bool = False) -> AutocorrSeq:
    """Input autocorrelation ``r_y / r_a`` on covered lags, zero elsewhere.

    A lag is covered when the mask has at least one sample pair there, i.e.
    ``r_a >= 1/(2N)``.  With ``strict=True`` any uncovered lag raises
    :class:`UncoveredLagError` instead of being zero-filled.
    """
    if ry.window.M != ra.window.M or ry.n != ra.n:
        raise LagWindowMismatchError(
            f"capture window (M={ry.window.M}, N={ry.n}) != sensing window (M={ra.window.M}, N={ra.n})"
        )
    ra_vals = ra.values.real
    covered = ra_vals >= 0.5 / ra.n
    if not covered.any():
        raise AllLagsUncoveredError("no lag in the window has a sample pair")
    if strict and not covered.all():
        raise UncoveredLagError(ra.lags[~covered])
    rx = np.zeros(ry.values.shape, dtype=np.complex128)
    rx[covered] = ry.values[covered] / ra_vals[covered]
    return AutocorrSeq(rx, ry.window, "input", ry.n, covered)


def power_spectrum(rx: AutocorrSeq) -> PowerSpectrum:
    """``|FFT_{2M-1}(r_x)|``.

    The lag vector is transformed in ascending order starting at ``-M+1``;
    any circular rotation only multiplies the FFT by a unit phase ramp, so
    the magnitude is the same as for a zero-lag-first ordering.
    """
    return PowerSpectrum(np.abs(sfft.fft(rx.values)), rx.window.fs)


def _capture_of(data, scheme: CoprimeScheme) -> np.ndarray:
    if isinstance(data, SparseCapture):
        y = data.y
    else:
        # masking is idempotent, so raw arrays may be frames or captures
        y = apply_sampling(data, sensing_vector(scheme)).y
    if y.size != scheme.N:
        raise LengthMismatchError(f"capture has {y.size} samples, scheme needs N={scheme.N}")
    return y


def estimate(
    data: NyquistFrame | SparseCapture | np.ndarray,
    scheme: CoprimeScheme,
    window: LagWindow,
    *,
    sensing: AutocorrSeq | None = None,
    cache=None,
    strict: bool = False,
    nfft: int | None = None,
) -> EstimateResult:
    """Run the full fast pipeline on a frame or capture.

    Parameters
    ----------
    data : NyquistFrame, SparseCapture or ndarray
        Frames (and raw arrays) are masked with the scheme's sensing vector
        first.
    scheme : CoprimeScheme
    window : LagWindow
    sensing : AutocorrSeq, optional
        Precomputed sensing autocorrelation; looked up (and cached) when
        omitted.
    cache : SensingCache, optional
        On-disk store for the sensing autocorrelation.
    strict : bool
        Raise on uncovered lags instead of zero-filling them.
    nfft : int, optional
        Transform length for the capture autocorrelation, ``>= 2N``.  Longer
        transforms (e.g. ``scipy.fft.next_fast_len(2*N)``) leave the
        retained lags unchanged.
    """
    y = _capture_of(data, scheme)
    if sensing is None:
        sensing = sensing_autocorr(scheme, window, cache)
    ry = capture_autocorr(y, window, nfft)
    rx = reconstruct_autocorr(ry, sensing, strict=strict)
    return EstimateResult(power_spectrum(rx), rx, rx.coverage)


def direct_autocorr_oracle(v, window: LagWindow, kind: str = "capture") -> AutocorrSeq:
    """Brute-force lag sums ``r[m] = (1/N) sum_n v[n] conj(v[n-m])``.

    O(N*M); each nonnegative lag is an explicit inner product and negative
    lags follow from ``r[-m] = conj(r[m])``.
    """
    v = np.asarray(v)
    N = v.size
    M = window.M
    if M > N:
        raise WindowTooWideError(f"M={M} exceeds the frame length N={N}")
    pos = np.empty(M, dtype=np.complex128)
    for m in range(M):
        pos[m] = np.vdot(v[: N - m], v[m:])
    pos /= N
    values = np.concatenate([np.conj(pos[:0:-1]), pos])
    if np.isrealobj(v):
        values = values.real
    return AutocorrSeq(values, window, kind, N)


def direct_estimate(
    data: NyquistFrame | SparseCapture | np.ndarray,
    scheme: CoprimeScheme,
    window: LagWindow,
    *,
    sensing: AutocorrSeq | None = None,
    strict: bool = False,
) -> EstimateResult:
    """Same pipeline as :func:`estimate` with direct lag sums instead of FFTs.

    Baseline for timing comparisons.
    """
    y = _capture_of(data, scheme)
    if sensing is None:
        sensing = sensing_autocorr(scheme, window)
    ry = direct_autocorr_oracle(y, window)
    rx = reconstruct_autocorr(ry, sensing, strict=strict)
    return EstimateResult(power_spectrum(rx), rx, rx.coverage)
