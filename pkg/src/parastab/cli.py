"""Command-line front end: ``parastab <command> [options]``.

Configuration is JSON with flat oscillator keys (``delta_hat``, ``gamma``,
``beta``, ``omega_m``, ``f_amp``, ``omega_f``) and one optional section per
command.  Flags override file values; ``--set key=value`` reaches section
options, with the value parsed as JSON.

Exit codes: 0 success, 1 a verify check failed, 2 bad configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from parastab import basin, floquet, hill, melnikov, verify
from parastab.core_ode import (
    IntegratorSettings,
    OscillatorParams,
    ParameterError,
    State,
    StepSizeUnderflow,
    full_field,
    integrate,
    origin_field,
    saddle_field,
)
from parastab.svg import line_chart

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

PARAM_KEYS = ("delta_hat", "gamma", "beta", "omega_m", "f_amp", "omega_f")

SECTION_DEFAULTS = {
    "trajectory": {
        "rhs": "full",
        "x0": 0.0,
        "y0": 0.0,
        "periods": 20,
        "rel_tol": 1e-9,
        "abs_tol": 1e-12,
    },
    "tongues": {
        "gamma_min": 0.0,
        "gamma_max": 0.1,
        "gamma_count": 21,
        "ks": [1, 2, 3],
        "truncation": hill.DEFAULT_TRUNCATION,
        "damped_beta": None,
        "svg": True,
    },
    "floquet-map": {
        "gamma_min": 0.0,
        "gamma_max": 0.5,
        "gamma_count": 11,
        "delta_hat_min": 0.05,
        "delta_hat_max": 3.0,
        "delta_hat_count": 60,
    },
    "melnikov": {"t0": 0.0},
    "thresholds": {
        "gamma_min": 0.0,
        "gamma_max": 0.08,
        "gamma_count": 17,
        "omega_fs": [0.85, 1.0, 1.15],
        "svg": True,
    },
    "basin": {
        "x_min": -1.0,
        "x_max": 2.0,
        "y_min": -1.5,
        "y_max": 1.5,
        "nx": 301,
        "ny": 301,
        "horizon_periods": 32,
        "escape_x": 10.0,
    },
    "integrity": {
        "f_min": 0.0,
        "f_max": 0.2,
        "f_count": 21,
        "gammas": None,
        "x_min": -1.0,
        "x_max": 2.0,
        "y_min": -1.5,
        "y_max": 1.5,
        "nx": 151,
        "ny": 151,
        "horizon_periods": 16,
        "escape_x": 10.0,
        "svg": True,
    },
    "verify": {"truncation": hill.DEFAULT_TRUNCATION},
}

COMMANDS = tuple(SECTION_DEFAULTS)


class ConfigError(ValueError):
    pass


def fmt(value) -> str:
    """Shortest round-trip decimal for floats."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _grid(lo, hi, count):
    if int(count) < 1:
        raise ConfigError("grid counts must be positive")
    return [float(v) for v in np.linspace(float(lo), float(hi), int(count))]


def resolve_config(command: str, file_cfg: dict | None, overrides: dict) -> dict:
    """Defaults, then the file, then command-line overrides."""
    params = {k: getattr(OscillatorParams(), k) for k in PARAM_KEYS}
    section = copy.deepcopy(SECTION_DEFAULTS[command])
    for source in (file_cfg or {}, overrides):
        for key, value in source.items():
            if key in PARAM_KEYS:
                params[key] = value
            elif key in SECTION_DEFAULTS:
                if key != command:
                    continue
                if not isinstance(value, dict):
                    raise ConfigError(f"section {key!r} must be an object")
                for sub, v in value.items():
                    if sub not in section:
                        raise ConfigError(f"unknown option {command}.{sub}")
                    section[sub] = v
            elif key in section:
                section[key] = value
            else:
                raise ConfigError(f"unknown key {key!r}")
    for key in PARAM_KEYS:
        if isinstance(params[key], bool) or not isinstance(params[key], (int, float)):
            raise ConfigError(f"{key} must be a number")
        params[key] = float(params[key])
    return {**params, command: section}


def params_of(cfg: dict) -> OscillatorParams:
    return OscillatorParams(**{k: cfg[k] for k in PARAM_KEYS})


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def cmd_trajectory(cfg, out, workers):
    opt = cfg["trajectory"]
    p = params_of(cfg)
    fields = {
        "full": (full_field, p.mass_period),
        "linearized-origin": (origin_field, 2 * math.pi),
        "linearized-saddle": (saddle_field, 2 * math.pi),
    }
    if opt["rhs"] not in fields:
        raise ConfigError(f"rhs must be one of {sorted(fields)}")
    make, period = fields[opt["rhs"]]
    settings = IntegratorSettings(rel_tol=float(opt["rel_tol"]), abs_tol=float(opt["abs_tol"]))
    tr = integrate(
        make(p), State(0.0, float(opt["x0"]), float(opt["y0"])), float(opt["periods"]) * period, settings
    )
    path = _write(out, "trajectory.csv", tr.to_csv())
    print(f"wrote {path} ({len(tr)} rows); max |x| = {float(np.max(np.abs(tr.x))):.6g}")
    return EXIT_OK


def cmd_tongues(cfg, out, workers):
    opt = cfg["tongues"]
    gammas = _grid(opt["gamma_min"], opt["gamma_max"], opt["gamma_count"])
    n = int(opt["truncation"])
    rows, gaps = [], 0
    series = {}
    for pt in hill.trace_tongues(gammas, tuple(int(k) for k in opt["ks"]), cfg["omega_m"], n):
        if isinstance(pt, tuple):
            family, k, g, _ = pt
            d = math.nan
            gaps += 1
        else:
            family, k, g, d = pt.family, pt.k, pt.gamma, pt.delta_hat
        rows.append((family.value, k, g, d))
        series.setdefault(f"{family.value} k={k}", ([], []))
        series[f"{family.value} k={k}"][0].append(g)
        series[f"{family.value} k={k}"][1].append(d)
    if opt["damped_beta"] is not None:
        beta = float(opt["damped_beta"])
        for g in gammas:
            band = hill.damped_first_tongue(g, beta, cfg["omega_m"])
            lo, hi = band if band else (math.nan, math.nan)
            for label, d in (("DampedLower", lo), ("DampedUpper", hi)):
                rows.append((label, 1, g, d))
                series.setdefault(label, ([], []))
                series[label][0].append(g)
                series[label][1].append(d)
    path = _write(out, "tongues.csv", csv_text(("family", "k", "gamma", "delta_hat"), rows))
    print(f"wrote {path}")
    if opt["svg"]:
        chart = line_chart(
            [(label, xs, ys) for label, (xs, ys) in series.items()], "gamma", "delta_hat", "transition curves"
        )
        _write(out, "tongues.svg", chart)
    if gaps:
        print(f"solver found no root at {gaps} grid points", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_floquet_map(cfg, out, workers):
    opt = cfg["floquet-map"]
    rows = floquet.floquet_map(
        _grid(opt["gamma_min"], opt["gamma_max"], opt["gamma_count"]),
        _grid(opt["delta_hat_min"], opt["delta_hat_max"], opt["delta_hat_count"]),
        beta=cfg["beta"],
        omega_m=cfg["omega_m"],
    )
    text = csv_text(
        ("gamma", "delta_hat", "max_abs_multiplier", "class"),
        [(g, d, m, c.value) for g, d, m, c in rows],
    )
    print(f"wrote {_write(out, 'floquet_map.csv', text)}")
    return EXIT_OK


def cmd_melnikov(cfg, out, workers):
    p = params_of(cfg)
    ev = melnikov.melnikov_closed(p, float(cfg["melnikov"]["t0"]))
    print(f"t0            {fmt(ev.t0)}")
    print(f"forcing term  {fmt(ev.forcing_term)}")
    print(f"damping term  {fmt(ev.damping_term)}")
    print(f"mass term     {fmt(ev.mass_term)}")
    print(f"M(t0)         {fmt(ev.value)}")
    print(f"sup M         {fmt(melnikov.melnikov_sup(p))}")
    print(f"erosion shift {melnikov.erosion_shift_sign(p.delta_hat, p.omega_m).value}")
    return EXIT_OK


def cmd_thresholds(cfg, out, workers):
    opt = cfg["thresholds"]
    gammas = _grid(opt["gamma_min"], opt["gamma_max"], opt["gamma_count"])
    omega_fs = [float(w) for w in opt["omega_fs"]]
    for g in gammas:
        OscillatorParams(delta_hat=cfg["delta_hat"], gamma=g)
    rows = melnikov.threshold_table(cfg["delta_hat"], cfg["beta"], cfg["omega_m"], gammas, omega_fs)
    path = _write(out, "thresholds.csv", csv_text(("gamma", "omega_f", "f_threshold"), rows))
    print(f"wrote {path}")
    if opt["svg"]:
        series = [
            (f"omega_f={wf:g}", [g for g, w, _ in rows if w == wf], [f for _, w, f in rows if w == wf])
            for wf in omega_fs
        ]
        _write(out, "thresholds.svg", line_chart(series, "gamma", "F_M", "Melnikov thresholds"))
    return EXIT_OK


def _spec(opt) -> basin.BasinGridSpec:
    return basin.BasinGridSpec(
        x_range=(float(opt["x_min"]), float(opt["x_max"])),
        y_range=(float(opt["y_min"]), float(opt["y_max"])),
        nx=int(opt["nx"]),
        ny=int(opt["ny"]),
        horizon_periods=int(opt["horizon_periods"]),
        escape_x=float(opt["escape_x"]),
    )


def cmd_basin(cfg, out, workers):
    raster = basin.compute_raster(params_of(cfg), _spec(cfg["basin"]), workers=workers)
    _write(out, "basin.pgm", raster.to_pgm())
    _write(out, "basin.csv", raster.to_csv())
    print(f"safe area {fmt(raster.area)} (fraction {fmt(raster.safe_fraction)}); failures {raster.failures}")
    return EXIT_OK


def cmd_integrity(cfg, out, workers):
    opt = cfg["integrity"]
    spec = _spec(opt)
    fs = _grid(opt["f_min"], opt["f_max"], opt["f_count"])
    gammas = opt["gammas"] if opt["gammas"] is not None else [cfg["gamma"]]
    template = params_of(cfg)
    series = []
    for idx, g in enumerate(gammas):
        curve = basin.integrity_curve(template.replace(gamma=float(g)), fs, spec, workers=workers)
        name = "integrity.csv" if len(gammas) == 1 else f"integrity_{idx}.csv"
        _write(out, name, curve.to_csv())
        cliff = basin.cliff_location(curve)
        print(f"gamma={fmt(float(g))}: wrote {name}; cliff at F = {fmt(cliff) if cliff is not None else 'none'}")
        series.append((f"gamma={float(g):g}", fs, list(curve.normalized_area)))
    if opt["svg"]:
        _write(out, "integrity.svg", line_chart(series, "F", "normalized safe area", "integrity"))
    return EXIT_OK


def cmd_verify(cfg, out, workers):
    results = verify.run_all(int(cfg["verify"]["truncation"]))
    for r in results:
        print(r.line())
    return EXIT_VERIFY if any(r.failed for r in results) else EXIT_OK


HANDLERS = {
    "trajectory": cmd_trajectory,
    "tongues": cmd_tongues,
    "floquet-map": cmd_floquet_map,
    "melnikov": cmd_melnikov,
    "thresholds": cmd_thresholds,
    "basin": cmd_basin,
    "integrity": cmd_integrity,
    "verify": cmd_verify,
}

NUMERIC_ERRORS = (
    StepSizeUnderflow,
    hill.NoRootInBracket,
    melnikov.QuadratureNotConverged,
    melnikov.OracleMismatch,
    FloatingPointError,
)


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parastab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes (env PARASTAB_WORKERS)")
    parser.add_argument("--seed", type=int, help="reserved; every algorithm is deterministic")
    parser.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a section option")
    for key in PARAM_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    return parser


def _workers(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("PARASTAB_WORKERS")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"PARASTAB_WORKERS must be an integer, got {env!r}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_cfg = None
        if args.config is not None:
            try:
                file_cfg = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from exc
            if not isinstance(file_cfg, dict):
                raise ConfigError("config must be a JSON object")
        overrides = {k: getattr(args, k) for k in PARAM_KEYS if getattr(args, k) is not None}
        overrides.update(_parse_set(args.set))
        cfg = resolve_config(args.command, file_cfg, overrides)
        workers = _workers(args.workers)
        if workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.dump_config:
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return EXIT_OK
        params_of(cfg)
        return HANDLERS[args.command](cfg, args.out, workers)
    except (ConfigError, ParameterError, melnikov.NeutralFrequency) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
