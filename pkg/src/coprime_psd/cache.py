"""On-disk cache for sensing-mask pair counts.

Each entry is a small binary file holding the integer pair counts
``N*r_a[m]`` for lags ``-M+1 .. M-1``, preceded by a fixed header::

    magic   4s   b"CPRA"
    version u2
    pad     u2
    r0 r1 p q M   5 x i8
    length  u8   (= 2M-1)
    counts  length x i8, little-endian

A file whose header disagrees with the requested key (or that is
truncated) is treated as a miss and rewritten.  Writes go to a temporary
file that is atomically renamed, so concurrent readers never see a
partial entry.
"""

from __future__ import annotations

import logging
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

MAGIC = b"CPRA"
VERSION = 1
_HEADER = struct.Struct("<4sHH5qQ")


def default_cache_dir() -> Path:
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "coprime_psd"


class SensingCache:
    """Directory of sensing-autocorrelation entries keyed by ``(r0, r1, p, q, M)``."""

    def __init__(self, directory=None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.hits = 0
        self.misses = 0

    def path_for(self, r0: int, r1: int, p: int, q: int, M: int) -> Path:
        return self.directory / f"ra_r{r0}_r{r1}_p{p}_q{q}_M{M}.bin"

    def load(self, r0: int, r1: int, p: int, q: int, M: int) -> np.ndarray | None:
        path = self.path_for(r0, r1, p, q, M)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            self.misses += 1
            return None
        except OSError as exc:
            log.warning("cannot read cache entry %s: %s", path, exc)
            self.misses += 1
            return None
        n = 2 * M - 1
        if len(blob) != _HEADER.size + 8 * n:
            log.info("cache entry %s has the wrong size; recomputing", path)
            self.misses += 1
            return None
        magic, version, _, *key, length = _HEADER.unpack_from(blob)
        if magic != MAGIC or version != VERSION or key != [r0, r1, p, q, M] or length != n:
            log.info("cache entry %s does not match the request; recomputing", path)
            self.misses += 1
            return None
        self.hits += 1
        counts = np.frombuffer(blob, dtype="<i8", offset=_HEADER.size).astype(np.int64)
        counts.setflags(write=False)
        return counts

    def store(self, r0: int, r1: int, p: int, q: int, M: int, counts) -> Path:
        counts = np.asarray(counts, dtype="<i8")
        if counts.shape != (2 * M - 1,):
            raise ValueError(f"expected {2 * M - 1} counts, got shape {counts.shape}")
        path = self.path_for(r0, r1, p, q, M)
        self.directory.mkdir(parents=True, exist_ok=True)
        header = _HEADER.pack(MAGIC, VERSION, 0, r0, r1, p, q, M, counts.size)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".ra_", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(header)
                fh.write(counts.tobytes())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path
