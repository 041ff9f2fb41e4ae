"""Readers and writers for frames, autocorrelations, spectra and sweep tables.

Floats are written with ``repr`` (shortest round-trip form) so identical
computations produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .estimator import AutocorrSeq, PowerSpectrum
from .scheme import CoprimeScheme, NyquistFrame

FRAME_FORMAT = "complex128-le-interleaved"


def atomic_write(path, data: bytes | str) -> Path:
    """Write via a temporary sibling file and rename into place."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- frames --------------------------------------------------------------------

def header_path(frame_path) -> Path:
    return Path(frame_path).with_suffix(".json")


def write_frame(path, frame: NyquistFrame, metadata: dict | None = None) -> tuple[Path, Path]:
    """Binary samples plus a JSON header sidecar next to it."""
    path = Path(path)
    inter = np.empty(2 * len(frame), dtype="<f8")
    inter[0::2] = frame.x.real
    inter[1::2] = frame.x.imag
    header = {"format": FRAME_FORMAT, "n_samples": len(frame), "fs_hz": frame.fs}
    if metadata:
        header.update(metadata)
    atomic_write(path, inter.tobytes())
    hpath = atomic_write(header_path(path), _dump_json(header))
    return path, hpath


def read_frame(path) -> tuple[NyquistFrame, dict]:
    path = Path(path)
    header = json.loads(header_path(path).read_text())
    if header.get("format") != FRAME_FORMAT:
        raise OSError(f"unsupported frame format {header.get('format')!r}")
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    n = int(header["n_samples"])
    if raw.size != 2 * n:
        raise OSError(f"{path} holds {raw.size // 2} samples, header says {n}")
    return NyquistFrame(raw[0::2] + 1j * raw[1::2], float(header["fs_hz"])), header


# -- autocorrelation and spectra -------------------------------------------------

def autocorr_csv(seq: AutocorrSeq) -> str:
    vals = np.asarray(seq.values, dtype=np.complex128)
    return _csv_text(["lag", "real", "imag"],
                     zip(seq.lags.tolist(), vals.real.astype(float), vals.imag.astype(float)))


def spectrum_csv(spec: PowerSpectrum) -> str:
    return _csv_text(["frequency_hz", "magnitude"],
                     zip(spec.frequencies.astype(float), spec.magnitudes.astype(float)))


def coverage_csv(lags, coverage) -> str:
    return _csv_text(["lag", "covered"], zip(np.asarray(lags).tolist(), np.asarray(coverage, int).tolist()))


def _window_meta(seq: AutocorrSeq) -> dict:
    w = seq.window
    return {"M": w.M, "delta_f_hz": None if np.isinf(w.delta_f) else w.delta_f, "fs_hz": w.fs}


def autocorr_json(seq: AutocorrSeq, scheme: CoprimeScheme | None = None) -> str:
    vals = np.asarray(seq.values, dtype=np.complex128)
    out = {
        "kind": seq.kind,
        "n": seq.n,
        "lag_window": _window_meta(seq),
        "lags": seq.lags.tolist(),
        "real": vals.real.tolist(),
        "imag": vals.imag.tolist(),
    }
    if seq.coverage is not None:
        out["covered"] = seq.coverage.astype(int).tolist()
    if scheme is not None:
        out["scheme"] = scheme.to_dict()
    return _dump_json(out)


def spectrum_json(spec: PowerSpectrum, scheme: CoprimeScheme | None = None,
                  window=None) -> str:
    out = {
        "fs_hz": spec.fs,
        "n_bins": spec.n_bins,
        "frequency_hz": spec.frequencies.tolist(),
        "magnitude": spec.magnitudes.tolist(),
    }
    if scheme is not None:
        out["scheme"] = scheme.to_dict()
    if window is not None:
        out["lag_window"] = {"M": window.M, "fs_hz": window.fs,
                             "delta_f_hz": None if np.isinf(window.delta_f) else window.delta_f}
    return _dump_json(out)


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


# -- sweeps --------------------------------------------------------------------

def sweep_csv(rows: list[dict], columns: list[str]) -> str:
    return _csv_text(columns, ([r[c] for c in columns] for r in rows))


def sweep_json(rows: list[dict], config: dict) -> str:
    return _dump_json({"config": config, "rows": rows})
