"""Generalized coprime sampling geometry.

Two uniform sub-Nyquist channels sample a Nyquist-rate grid with periods
``r0*Ts`` and ``r1*Ts``.  Channel 0 takes ``r1`` samples spaced by ``r0``
in each of ``p`` consecutive blocks of length ``r0*r1``; channel 1 takes
``r0`` samples spaced by ``r1`` in the same number of blocks, offset by
``q`` blocks.  The union of both grids is the sample position set, and the
binary mask over a frame of length ``N = (p + q)*r0*r1`` is the sensing
vector.
"""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path

import numpy as np

from .errors import (
    LengthMismatchError,
    NonPositiveParameterError,
    NotCoprimeError,
    OrderViolationError,
)

__all__ = [
    "CoprimeScheme",
    "SensingVector",
    "NyquistFrame",
    "SparseCapture",
    "validate_scheme",
    "channel_positions",
    "sample_positions",
    "sensing_vector",
    "apply_sampling",
    "write_positions",
    "read_positions",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _as_positive_int(name: str, value) -> int:
    if isinstance(value, bool):
        raise NonPositiveParameterError(f"{name} must be a positive integer, got {value!r}")
    try:
        ivalue = operator.index(value)
    except TypeError:
        if isinstance(value, float) and value.is_integer():
            ivalue = int(value)
        else:
            raise NonPositiveParameterError(
                f"{name} must be a positive integer, got {value!r}"
            ) from None
    if ivalue < 1:
        raise NonPositiveParameterError(f"{name} must be a positive integer, got {value!r}")
    return ivalue


@dataclass(frozen=True)
class CoprimeScheme:
    """Sampler geometry.

    Parameters
    ----------
    r0, r1 : int
        Coprime undersampling factors of the two channels, ``r0 < r1``.
    p : int
        Multiple coprime unit factor (number of ``r0*r1`` blocks per channel).
    q : int
        Non-overlapping factor (block offset of channel 1).
    fs : float
        Nyquist sampling rate in Hz.
    """

    r0: int
    r1: int
    p: int
    q: int
    fs: float

    def __post_init__(self):
        r0 = _as_positive_int("r0", self.r0)
        r1 = _as_positive_int("r1", self.r1)
        p = _as_positive_int("p", self.p)
        q = _as_positive_int("q", self.q)
        try:
            fs = float(self.fs)
        except (TypeError, ValueError):
            raise NonPositiveParameterError(f"fs must be a positive number, got {self.fs!r}") from None
        if not np.isfinite(fs) or fs <= 0:
            raise NonPositiveParameterError(f"fs must be a positive number, got {self.fs!r}")
        if r0 >= r1:
            raise OrderViolationError(f"require r0 < r1, got r0={r0}, r1={r1}")
        if gcd(r0, r1) != 1:
            raise NotCoprimeError(f"r0={r0} and r1={r1} share the factor {gcd(r0, r1)}")
        for name, v in (("r0", r0), ("r1", r1), ("p", p), ("q", q), ("fs", fs)):
            object.__setattr__(self, name, v)

    @property
    def period(self) -> int:
        """Length ``r0*r1`` of one coprime block."""
        return self.r0 * self.r1

    @property
    def N(self) -> int:
        return (self.p + self.q) * self.r0 * self.r1

    @property
    def Ts(self) -> float:
        return 1.0 / self.fs

    def replace(self, **changes) -> "CoprimeScheme":
        params = self.to_dict()
        params.update({("fs_hz" if k == "fs" else k): v for k, v in changes.items()})
        return CoprimeScheme.from_dict(params)

    def to_dict(self) -> dict:
        return {"r0": self.r0, "r1": self.r1, "p": self.p, "q": self.q, "fs_hz": self.fs}

    @classmethod
    def from_dict(cls, d: dict) -> "CoprimeScheme":
        fs = d["fs_hz"] if "fs_hz" in d else d["fs"]
        return cls(d["r0"], d["r1"], d["p"], d["q"], fs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CoprimeScheme":
        return cls.from_dict(json.loads(text))


def validate_scheme(r0, r1, p, q, fs) -> CoprimeScheme:
    """Build a :class:`CoprimeScheme`, raising on invalid parameters."""
    return CoprimeScheme(r0, r1, p, q, fs)


def channel_positions(scheme: CoprimeScheme) -> tuple[np.ndarray, np.ndarray]:
    """Sample indices of channel 0 and channel 1 on the Nyquist grid.

    Both arrays are sorted; they may share indices at common multiples of
    ``r0*r1``.
    """
    r0, r1, p, q = scheme.r0, scheme.r1, scheme.p, scheme.q
    blocks = np.arange(p, dtype=np.int64)[:, None] * (r0 * r1)
    ch0 = (r0 * np.arange(r1, dtype=np.int64)[None, :] + blocks).ravel()
    ch1 = (r1 * np.arange(r0, dtype=np.int64)[None, :] + blocks + q * r0 * r1).ravel()
    return ch0, ch1


def sample_positions(scheme: CoprimeScheme) -> np.ndarray:
    """Sorted union of both channels' sample indices, duplicates merged."""
    ch0, ch1 = channel_positions(scheme)
    return _frozen(np.union1d(ch0, ch1))


@dataclass(frozen=True, eq=False)
class SensingVector:
    """Binary mask ``a`` of length N with ones exactly on ``positions``."""

    a: np.ndarray
    positions: np.ndarray
    scheme: CoprimeScheme | None = None

    @property
    def N(self) -> int:
        return self.a.size

    @classmethod
    def from_mask(cls, a, scheme: CoprimeScheme | None = None) -> "SensingVector":
        a = np.asarray(a, dtype=np.float64)
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("sensing mask entries must be 0 or 1")
        return cls(_frozen(a.copy()), _frozen(np.flatnonzero(a).astype(np.int64)), scheme)


def sensing_vector(scheme: CoprimeScheme) -> SensingVector:
    positions = sample_positions(scheme)
    a = np.zeros(scheme.N, dtype=np.float64)
    a[positions] = 1.0
    return SensingVector(_frozen(a), positions, scheme)


@dataclass(frozen=True, eq=False)
class NyquistFrame:
    """Complex samples ``x[n]`` on the full-rate grid."""

    x: np.ndarray
    fs: float

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.complex128))

    def __len__(self) -> int:
        return self.x.size

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.x) ** 2)) if self.x.size else 0.0


@dataclass(frozen=True, eq=False)
class SparseCapture:
    """Masked observation: ``y[n] = x[n]`` on the position set, zero elsewhere."""

    y: np.ndarray
    positions: np.ndarray
    scheme: CoprimeScheme | None = None

    def __len__(self) -> int:
        return self.y.size

    def channel_samples(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-channel sample streams ``y0[n0] = x[r0*n0]`` and ``y1[n1] = x[r1*n1]``."""
        if self.scheme is None:
            raise ValueError("capture has no scheme attached")
        ch0, ch1 = channel_positions(self.scheme)
        return self.y[ch0], self.y[ch1]


def apply_sampling(frame: NyquistFrame | np.ndarray, sv: SensingVector) -> SparseCapture:
    """Elementwise product of the frame with the sensing mask."""
    x = frame.x if isinstance(frame, NyquistFrame) else np.asarray(frame, dtype=np.complex128)
    if x.shape != (sv.N,):
        raise LengthMismatchError(f"frame has {x.size} samples, sensing vector has {sv.N}")
    return SparseCapture(sv.a * x, sv.positions, sv.scheme)


def write_positions(path, positions) -> None:
    """One integer per line, for diffing against external tools."""
    Path(path).write_text("".join(f"{int(n)}\n" for n in positions))


def read_positions(path) -> np.ndarray:
    text = Path(path).read_text().split()
    return np.array([int(t) for t in text], dtype=np.int64)
