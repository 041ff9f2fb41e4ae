"""Command-line front end.

Subcommands::

    coprime-psd gen       scenario -> binary frame + JSON header
    coprime-psd estimate  frame or scenario -> spectrum CSV + coverage CSV
    coprime-psd sweep     sweep config -> results CSV/JSON
    coprime-psd positions scheme -> sample positions, one per line
    coprime-psd replay    manifest -> re-run and compare data outputs

Every run writes ``<output stem>.manifest.json`` next to its primary output.
Values in a config or scenario file override command-line flags, which in
turn override built-in defaults.

Exit codes: 0 ok, 1 replay mismatch, 2 config error, 3 I/O error,
4 length mismatch, 5 uncovered lags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from scipy.fft import next_fast_len

from . import __version__
from .cache import SensingCache
from .errors import ConfigError, CoverageError, ShapeError
from .estimator import LagWindow, estimate, sensing_autocorr
from .evaluation import SweepConfig, default_lag_window, monte_carlo_sweep, time_benchmark
from .fileio import (
    atomic_write,
    autocorr_csv,
    coverage_csv,
    read_frame,
    sha256_file,
    spectrum_csv,
    spectrum_json,
    sweep_csv,
    sweep_json,
    write_frame,
)
from .manifest import RunManifest, manifest_path_for
from .scheme import CoprimeScheme, sample_positions, write_positions
from .siggen import preset, render_scenario, scenario_from_dict

log = logging.getLogger("coprime_psd")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_IO, EXIT_SHAPE, EXIT_COVERAGE = 0, 1, 2, 3, 4, 5

DEFAULT_SCHEME = {"r0": 3, "r1": 4, "p": 300, "q": 1, "fs_hz": 32e9}
_FLAG_KEYS = {"r0": "r0", "r1": "r1", "p": "p", "q": "q", "fs": "fs_hz"}


def _load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return d


def _scheme_dict(args, override: dict | None = None) -> dict:
    d = dict(DEFAULT_SCHEME)
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            d[key] = v
    if override:
        d.update({("fs_hz" if k == "fs" else k): v for k, v in override.items()})
    CoprimeScheme.from_dict(d)  # validate early
    return d


def _scenario_arg(args) -> dict:
    if getattr(args, "preset", None):
        return preset(args.preset)
    return _load_json(args.scenario)


# -- run functions: resolved config in, files out ------------------------------

def run_gen(config: dict, output: Path) -> list[tuple[Path, str]]:
    scheme = CoprimeScheme.from_dict(config["scheme"])
    scenario = scenario_from_dict(config["scenario"], scheme)
    frame = render_scenario(scenario, scheme)
    meta = {"scheme": scheme.to_dict(), "scenario": config["scenario"]}
    fpath, hpath = write_frame(output, frame, meta)
    return [(fpath, "data"), (hpath, "data")]


def run_estimate(config: dict, output: Path, notes: dict | None = None) -> list[tuple[Path, str]]:
    scheme = CoprimeScheme.from_dict(config["scheme"])
    src = config["input"]
    if src["type"] == "frame":
        if sha256_file(src["path"]) != src["sha256"]:
            raise ConfigError(f"input frame {src['path']} changed since the manifest was written")
        frame, _ = read_frame(src["path"])
    else:
        frame = render_scenario(scenario_from_dict(src["scenario"], scheme), scheme)
    window = LagWindow(config["M"], config["delta_f_hz"] if config["delta_f_hz"] is not None else float("inf"),
                       scheme.fs)
    cache = SensingCache(config["cache_dir"]) if config.get("cache_dir") else None
    sensing = sensing_autocorr(scheme, window, cache)
    if cache is not None and notes is not None:
        notes["cache"] = "hit" if cache.hits else "miss"
        log.info("sensing autocorrelation cache %s (%s)", notes["cache"], cache.directory)
    nfft = next_fast_len(2 * scheme.N) if config.get("fft_length") == "fast" else None
    res = estimate(frame, scheme, window, sensing=sensing, strict=config["strict"], nfft=nfft)

    outs = [(atomic_write(output, spectrum_csv(res.spectrum)), "data")]
    cov = output.with_name(output.stem + ".coverage.csv")
    outs.append((atomic_write(cov, coverage_csv(res.autocorr.lags, res.coverage)), "data"))
    if config.get("json"):
        outs.append((atomic_write(output.with_suffix(".json"),
                                  spectrum_json(res.spectrum, scheme, window)), "data"))
    if config.get("autocorr"):
        ac = output.with_name(output.stem + ".autocorr.csv")
        outs.append((atomic_write(ac, autocorr_csv(res.autocorr)), "data"))
    return outs


def run_sweep(config: dict, output: Path) -> list[tuple[Path, str]]:
    mode = config.get("mode", "rmse")
    if mode == "timing":
        rows = time_benchmark(
            config["p_values"], r0=config["r0"], r1=config["r1"], q=config["q"], fs=config["fs_hz"],
            lag_fraction=config["lag_fraction"], repeats=config["repeats"],
            seed=config["base_seed"], oracle=config["oracle"],
            fast_fft_length=config["fast_fft_length"],
        )
        table = [{**asdict(r), "speedup": r.speedup} for r in rows]
        cols = ["p", "N", "M", "fast_s", "oracle_s", "speedup"]
        return [
            (atomic_write(output, sweep_csv(table, cols)), "measurement"),
            (atomic_write(output.with_suffix(".json"), sweep_json(table, config)), "measurement"),
        ]
    if mode != "rmse":
        raise ConfigError(f"unknown sweep mode {mode!r}; use 'rmse' or 'timing'")
    cfg = SweepConfig.from_dict(config)
    result = monte_carlo_sweep(cfg)
    for value, j, msg in result.errors:
        log.warning("trial %d at %s=%s failed: %s", j, cfg.axis, value, msg)
    data = result.table(timing=False)
    cols = ["axis_value", "rmse", "trials", "failed"]
    timing = [{"axis_value": r.axis_value, "mean_time_s": r.mean_time_s} for r in result.rows]
    return [
        (atomic_write(output, sweep_csv(data, cols)), "data"),
        (atomic_write(output.with_suffix(".json"), sweep_json(data, cfg.to_dict())), "data"),
        (atomic_write(output.with_name(output.stem + ".timing.csv"),
                      sweep_csv(timing, ["axis_value", "mean_time_s"])), "measurement"),
    ]


def run_positions(config: dict, output: Path) -> list[tuple[Path, str]]:
    scheme = CoprimeScheme.from_dict(config["scheme"])
    write_positions(output, sample_positions(scheme))
    return [(output, "data")]


RUNNERS = {"gen": run_gen, "estimate": run_estimate, "sweep": run_sweep, "positions": run_positions}


def _execute(command: str, config: dict, output: Path, seed) -> RunManifest:
    output.parent.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command, {**config, "output": str(output.resolve())}, seed)
    if command == "estimate":
        outs = run_estimate(config, output, manifest.notes)
    else:
        outs = RUNNERS[command](config, output)
    for path, kind in outs:
        manifest.add_output(path, kind)
    manifest.write(manifest_path_for(output))
    return manifest


# -- argument handling ---------------------------------------------------------

def _cmd_gen(args) -> int:
    scenario = _scenario_arg(args)
    scheme = _scheme_dict(args, scenario.pop("scheme", None))
    if args.seed is not None:
        scenario.setdefault("seed", args.seed)
    scenario.setdefault("seed", 0)
    scenario_from_dict(scenario, CoprimeScheme.from_dict(scheme))  # validate before writing
    m = _execute("gen", {"scheme": scheme, "scenario": scenario}, Path(args.output), scenario["seed"])
    print(m.outputs[0]["path"])
    return EXIT_OK


def _cmd_estimate(args) -> int:
    if args.frame:
        fpath = Path(args.frame).resolve()
        frame, header = read_frame(fpath)
        override = dict(header.get("scheme") or {})
        if not override and args.fs is None:
            override["fs_hz"] = frame.fs
        scheme = _scheme_dict(args, override)
        if scheme["fs_hz"] != frame.fs:
            raise ConfigError(f"frame sampled at {frame.fs} Hz, scheme says {scheme['fs_hz']} Hz")
        source = {"type": "frame", "path": str(fpath), "sha256": sha256_file(fpath)}
        seed = None
    else:
        scenario = _scenario_arg(args)
        scheme = _scheme_dict(args, scenario.pop("scheme", None))
        if args.seed is not None:
            scenario.setdefault("seed", args.seed)
        scenario.setdefault("seed", 0)
        source = {"type": "scenario", "scenario": scenario}
        seed = scenario["seed"]
    sch = CoprimeScheme.from_dict(scheme)
    window = default_lag_window(sch, args.delta_f)
    config = {
        "scheme": scheme,
        "input": source,
        "M": window.M,
        "delta_f_hz": args.delta_f,
        "strict": bool(args.strict),
        "fft_length": "fast" if args.fast_fft else "exact",
        "cache_dir": str(Path(args.cache_dir).resolve()) if args.cache_dir else None,
        "json": bool(args.json),
        "autocorr": bool(args.autocorr),
    }
    m = _execute("estimate", config, Path(args.output), seed)
    print(m.outputs[0]["path"])
    return EXIT_OK


TIMING_DEFAULTS = {"p_values": [100, 300, 1000, 3000], "r0": 3, "r1": 4, "q": 1, "fs_hz": 32e9,
                   "lag_fraction": 0.1, "repeats": 5, "oracle": True, "fast_fft_length": False}


def _cmd_sweep(args) -> int:
    file_cfg = _load_json(args.config)
    mode = file_cfg.get("mode", "rmse")
    config = {"mode": mode, "base_seed": args.seed if args.seed is not None else 0}
    if mode == "timing":
        unknown = set(file_cfg) - set(TIMING_DEFAULTS) - set(config)
        if unknown:
            raise ConfigError(f"unknown timing config keys: {sorted(unknown)}")
        config.update(TIMING_DEFAULTS)
        config.update(file_cfg)
    elif mode == "rmse":
        if args.trials is not None:
            config["trials"] = args.trials
        if args.workers is not None:
            config["workers"] = args.workers
        config.update(file_cfg)
        config["scheme"] = _scheme_dict(args, file_cfg.get("scheme"))
        config = {"mode": "rmse", **SweepConfig.from_dict(config).to_dict()}
    else:
        raise ConfigError(f"unknown sweep mode {mode!r}; use 'rmse' or 'timing'")
    m = _execute("sweep", config, Path(args.output), config["base_seed"])
    print(m.outputs[0]["path"])
    return EXIT_OK


def _cmd_positions(args) -> int:
    scheme = _scheme_dict(args, None)
    _execute("positions", {"scheme": scheme}, Path(args.output), None)
    return EXIT_OK


def replay(manifest_path, outdir=None) -> tuple[RunManifest, list[str]]:
    """Re-run a manifest's command; return the new manifest and mismatched outputs."""
    old = RunManifest.read(manifest_path)
    config = dict(old.config)
    output = Path(config.pop("output"))
    if outdir is not None:
        output = Path(outdir) / output.name
    new = _execute(old.command, config, output, old.seed)
    new_by_name = {Path(o["path"]).name: o["sha256"] for o in new.data_outputs()}
    mismatched = [Path(o["path"]).name for o in old.data_outputs()
                  if new_by_name.get(Path(o["path"]).name) != o["sha256"]]
    return new, mismatched


def _cmd_replay(args) -> int:
    _, mismatched = replay(args.manifest, args.outdir)
    for name in mismatched:
        print(f"MISMATCH {name}", file=sys.stderr)
    if mismatched:
        return EXIT_MISMATCH
    print("all data outputs reproduced")
    return EXIT_OK


def _add_scheme_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scheme")
    g.add_argument("--r0", type=int, help="channel-0 undersampling factor (default 3)")
    g.add_argument("--r1", type=int, help="channel-1 undersampling factor (default 4)")
    g.add_argument("-p", type=int, help="multiple coprime unit factor (default 300)")
    g.add_argument("-q", type=int, help="non-overlapping factor (default 1)")
    g.add_argument("--fs", type=float, help="Nyquist rate in Hz (default 32e9)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coprime-psd", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="render a scenario to a binary frame")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--preset", help="built-in scenario: tones50, bpsk20, chirps2, mixed")
    g.add_argument("-o", "--output", required=True, help="frame path (.bin); header goes to .json")
    g.add_argument("--seed", type=int)
    _add_scheme_flags(g)
    g.set_defaults(func=_cmd_gen)

    e = sub.add_parser("estimate", help="estimate the power spectrum")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--frame", help="binary frame written by 'gen'")
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--preset")
    e.add_argument("-o", "--output", required=True, help="spectrum CSV path")
    e.add_argument("--delta-f", type=float, help="frequency resolution in Hz (default M=min(N/4, 4097))")
    e.add_argument("--strict", action="store_true", help="fail on uncovered lags instead of zero-filling")
    e.add_argument("--cache-dir", help="directory for cached sensing autocorrelations")
    e.add_argument("--fast-fft", action="store_true", help="pad transforms to a fast length >= 2N")
    e.add_argument("--json", action="store_true", help="also write the spectrum as JSON")
    e.add_argument("--autocorr", action="store_true", help="also write the reconstructed autocorrelation")
    e.add_argument("--seed", type=int)
    _add_scheme_flags(e)
    e.set_defaults(func=_cmd_estimate)

    s = sub.add_parser("sweep", help="Monte Carlo RMSE sweep or timing benchmark")
    s.add_argument("config", help="sweep config JSON")
    s.add_argument("-o", "--output", required=True, help="results CSV path")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int, help="base seed")
    s.add_argument("--workers", type=int)
    _add_scheme_flags(s)
    s.set_defaults(func=_cmd_sweep)

    ps = sub.add_parser("positions", help="write the sample position set")
    ps.add_argument("-o", "--output", required=True)
    _add_scheme_flags(ps)
    ps.set_defaults(func=_cmd_positions)

    r = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    r.add_argument("manifest")
    r.add_argument("--outdir", help="write outputs here instead of the original paths")
    r.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CoverageError as exc:
        log.error("%s", exc)
        return EXIT_COVERAGE
    except ShapeError as exc:
        log.error("%s", exc)
        return EXIT_SHAPE
    except (ConfigError, KeyError, TypeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
