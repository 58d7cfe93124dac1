"""Command-line front end: simulate | compare | oracle.

Configs are flat key=value text files or JSON; a JSON file containing a
"config" object (the sidecar written next to every CSV) is accepted
directly, so any finished run can be replayed bit-identically from its own
sidecar.  Command-line flags mirror the config keys and override the file.

Exit codes: 0 success, 2 configuration error (the message names the
offending key), 3 abort-fraction failure, 4 oracle truncation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .backends import BackendError
from .estimator import (AbortFractionError, RunConfig, compare_schemes,
                        estimate)
from .filters import FilterScheme
from .model import ModelParams, discretize_bath
from .oracle import OracleConfig, TruncationError, exact_population

__all__ = ["main", "run_simulate", "run_compare", "run_oracle",
           "load_config", "ConfigError"]

_FLOAT_KEYS = ("omega", "xi", "beta", "omega_max", "tau", "t_max",
               "c_t", "c_E")
_INT_KEYS = ("n_modes", "max_hops", "n_traj", "seed", "workers")
_STR_KEYS = ("scheme", "output")
KNOWN_KEYS = _FLOAT_KEYS + _INT_KEYS + _STR_KEYS

_SCHEME_NAMES = ("none", "observable_cut", "transition_filter", "combined")

# keys that must come from the config/overrides (scheme is checked by the
# subcommands that need it; n_modes/omega_max/workers/output have defaults)
_REQUIRED = ("omega", "xi", "beta", "tau", "t_max", "max_hops", "n_traj",
             "seed")


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(message)


def _coerce(key: str, value) -> object:
    try:
        if key in _FLOAT_KEYS:
            if isinstance(value, bool):
                raise ValueError("boolean")
            return float(value)
        if key in _INT_KEYS:
            if isinstance(value, bool):
                raise ValueError("boolean")
            if isinstance(value, float) and value != int(value):
                raise ValueError("not an integer")
            return int(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"config key '{key}': bad value {value!r} "
                          f"({exc})") from None


def load_config(path: str) -> dict:
    """Read a key=value or JSON config file into a typed dict.

    JSON objects may wrap the mapping in a "config" member (the sidecar
    layout); every other top-level member is ignored so sidecars round-trip.
    Unknown keys are rejected by name.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    raw: dict = {}
    if stripped.startswith("{"):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ConfigError("", f"{path}: JSON config must be an object")
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        raw = data
    else:
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError("", f"{path}:{ln}: expected key = value")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    cfg = {}
    for key, value in raw.items():
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"unknown config key '{key}'")
        cfg[key] = _coerce(key, value)
    return cfg


def _resolve(path: str, overrides: dict) -> dict:
    cfg = load_config(path)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"unknown override '{key}'")
        cfg[key] = _coerce(key, value)
    cfg.setdefault("n_modes", 200)
    cfg.setdefault("omega_max", 3.0)
    if "workers" not in cfg:
        env = os.environ.get("SSTPSIM_WORKERS")
        cfg["workers"] = _coerce("workers", env) if env else 1
    for key in _REQUIRED:
        if key not in cfg:
            raise ConfigError(key, f"missing required config key '{key}'")
    return cfg


def _build_scheme(name: str, cfg: dict) -> FilterScheme:
    if name not in _SCHEME_NAMES:
        raise ConfigError("scheme", f"unknown scheme '{name}'; expected one "
                          f"of {', '.join(_SCHEME_NAMES)}")
    kwargs = {}
    if name in ("observable_cut", "combined"):
        if "c_t" not in cfg:
            raise ConfigError("c_t", f"scheme '{name}' requires config "
                              "key 'c_t'")
        kwargs["c_t"] = cfg["c_t"]
    if name in ("transition_filter", "combined"):
        if "c_E" not in cfg:
            raise ConfigError("c_E", f"scheme '{name}' requires config "
                              "key 'c_E'")
        kwargs["c_e"] = cfg["c_E"]
    return FilterScheme(name, **kwargs)


def _run_config(cfg: dict, scheme: FilterScheme) -> RunConfig:
    model = ModelParams(omega=cfg["omega"], xi=cfg["xi"], beta=cfg["beta"],
                        n_modes=cfg["n_modes"], omega_max=cfg["omega_max"])
    return RunConfig(model=model, scheme=scheme, n_traj=cfg["n_traj"],
                     tau=cfg["tau"], t_max=cfg["t_max"],
                     max_hops=cfg["max_hops"], master_seed=cfg["seed"],
                     n_workers=cfg["workers"])


def _write_csv(path: str, times, mean, stderr) -> None:
    lines = ["t,sigma_z_mean,sigma_z_stderr"]
    for t, m, s in zip(times, mean, stderr):
        lines.append(f"{float(t)!r},{float(m)!r},{float(s)!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _sidecar_path(csv_path: str) -> str:
    base, _ = os.path.splitext(csv_path)
    return base + ".json"


def _write_sidecar(csv_path: str, cfg: dict, extra: dict) -> None:
    doc = {"config": {k: cfg[k] for k in KNOWN_KEYS if k in cfg},
           "code_version": __version__}
    doc.update(extra)
    with open(_sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_simulate(config_path: str, overrides: dict | None = None) -> int:
    """simulate subcommand: one scheme, one CSV plus sidecar."""
    overrides = overrides or {}
    cfg = _resolve(config_path, overrides)
    if "scheme" not in cfg:
        raise ConfigError("scheme", "missing required config key 'scheme'")
    scheme = _build_scheme(cfg["scheme"], cfg)
    run = _run_config(cfg, scheme)
    out_path = cfg.get("output", "simulate.csv")
    cfg["output"] = out_path
    t0 = time.monotonic()
    series = estimate(run)
    wall = time.monotonic() - t0
    _write_csv(out_path, series.times, series.mean, series.stderr)
    _write_sidecar(out_path, cfg,
                   {"wall_time_s": wall, "n_aborted": series.n_aborted,
                    "backend": series.backend,
                    "max_weight": series.max_weight})
    return 0


def run_compare(config_path: str, scheme_names: list[str],
                overrides: dict | None = None) -> int:
    """compare subcommand: one CSV per scheme plus a variance-ratio CSV."""
    overrides = overrides or {}
    if len(scheme_names) < 2:
        raise ConfigError("schemes", "compare needs at least 2 schemes")
    cfg = _resolve(config_path, overrides)
    schemes = [_build_scheme(name, cfg) for name in scheme_names]
    run = _run_config(cfg, schemes[0])
    out = cfg.get("output", "compare.csv")
    cfg["output"] = out
    stem, _ = os.path.splitext(out)
    t0 = time.monotonic()
    report = compare_schemes(run, schemes)
    wall = time.monotonic() - t0
    for i, (name, series) in enumerate(zip(scheme_names, report.series)):
        _write_csv(f"{stem}_{i}_{name}.csv", series.times, series.mean,
                   series.stderr)
    times = report.series[0].times
    header = ["t"] + [f"ratio_{i}_{name}"
                      for i, name in enumerate(scheme_names)]
    lines = [",".join(header)]
    for k, t in enumerate(times):
        row = [repr(float(t))]
        row += [repr(float(report.variance_ratio[i][k]))
                for i in range(len(scheme_names))]
        lines.append(",".join(row))
    ratio_path = f"{stem}_ratio.csv"
    with open(ratio_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_sidecar(f"{stem}.csv", cfg,
                   {"schemes": scheme_names, "wall_time_s": wall,
                    "n_aborted": [s.n_aborted for s in report.series],
                    "backend": report.series[0].backend})
    return 0


# auto-picked truncations that converge at desk scale; the doubling check
# still guards them and triggers one retry
_ORACLE_NMAX = {1: 28, 2: 12}


def run_oracle(config_path: str, overrides: dict | None = None) -> int:
    """oracle subcommand: exact curve for the same (small) discretized bath."""
    overrides = overrides or {}
    cfg = _resolve(config_path, overrides)
    if cfg["n_modes"] > 2:
        raise ConfigError("n_modes", "oracle supports at most 2 bath modes "
                          f"(got n_modes = {cfg['n_modes']})")
    model = ModelParams(omega=cfg["omega"], xi=cfg["xi"], beta=cfg["beta"],
                        n_modes=cfg["n_modes"], omega_max=cfg["omega_max"])
    modes = tuple(discretize_bath(model))
    n_steps = int(round(cfg["t_max"] / cfg["tau"]))
    if abs(n_steps * cfg["tau"] - cfg["t_max"]) > 1e-9 * max(1.0, cfg["t_max"]):
        raise ConfigError("t_max", "t_max must be an integer multiple of tau")
    t_grid = cfg["tau"] * np.arange(n_steps + 1)
    out_path = cfg.get("output", "oracle.csv")
    cfg["output"] = out_path

    n_max = _ORACLE_NMAX[len(modes)]
    t0 = time.monotonic()
    try:
        series = exact_population(OracleConfig(modes=modes, n_max=n_max,
                                               beta=cfg["beta"],
                                               omega=cfg["omega"],
                                               t_grid=t_grid))
    except TruncationError as exc:
        n_max = exc.suggested_n_max
        series = exact_population(OracleConfig(modes=modes, n_max=n_max,
                                               beta=cfg["beta"],
                                               omega=cfg["omega"],
                                               t_grid=t_grid))
    wall = time.monotonic() - t0
    _write_csv(out_path, series.times, series.mean, series.stderr)
    _write_sidecar(out_path, cfg,
                   {"wall_time_s": wall, "n_max": n_max,
                    "backend": "oracle"})
    return 0


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    for key in _FLOAT_KEYS:
        parser.add_argument(f"--{key}", type=float, default=None)
    for key in _INT_KEYS:
        parser.add_argument(f"--{key}", type=int, default=None)
    for key in _STR_KEYS:
        parser.add_argument(f"--{key}", type=str, default=None)


def _overrides(args: argparse.Namespace) -> dict:
    return {key: getattr(args, key) for key in KNOWN_KEYS
            if getattr(args, key, None) is not None}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sstpsim",
        description="Trajectory simulation of spin-boson population "
                    "dynamics with statistical-error filters")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one filter scheme")
    p_sim.add_argument("config")
    _add_override_flags(p_sim)

    p_cmp = sub.add_parser("compare", help="run several schemes, same seed")
    p_cmp.add_argument("config")
    p_cmp.add_argument("--schemes", required=True,
                       help="comma-separated scheme names")
    _add_override_flags(p_cmp)

    p_orc = sub.add_parser("oracle", help="exact curve for small baths")
    p_orc.add_argument("config")
    _add_override_flags(p_orc)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return run_simulate(args.config, _overrides(args))
        if args.command == "compare":
            names = [s.strip() for s in args.schemes.split(",") if s.strip()]
            return run_compare(args.config, names, _overrides(args))
        return run_oracle(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, BackendError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AbortFractionError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    except TruncationError as exc:
        print(f"oracle failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
