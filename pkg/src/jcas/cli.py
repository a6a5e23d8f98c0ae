"""Command-line entry point.

Exit codes: 0 success, 1 oracle failure, 2 configuration error, 3 numerical
error.
"""

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from .channel import SystemConfig, energy_from_snr
from .errors import ConfigError, JcasError
from .figures import run_figures
from .harness import ALL_SCHEMES, REPORT_COLUMNS, Scheme, SweepSpec, config_hash_of, run_sweep, run_trial_schemes
from .oracles import run_all

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["main", "build_parser", "resolve_config", "load_config_file", "parse_override"]

EXIT_OK, EXIT_ORACLE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_TRIALS = 500
PAPER_TRIALS = 5000
ORACLE_SOFT_BUDGET_S = 60.0

_SYSTEM_KEYS = {f.name for f in dataclasses.fields(SystemConfig)} | {"snr_db"}
_SWEEP_KEYS = {"axis", "values", "trials", "schemes"}
_SINGLE_KEYS = {"schemes"}


def load_config_file(path) -> dict:
    """Read a TOML scenario file into ``{"system": ..., "sweep": ..., "single": ...}``.

    System keys may sit at top level or in a ``[system]`` table.
    """
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    out = {"system": {}, "sweep": {}, "single": {}}
    for key, value in raw.items():
        if key in out and isinstance(value, dict):
            out[key].update(value)
        elif isinstance(value, dict):
            raise ConfigError(f"unknown section [{key}] in {path}")
        else:
            out["system"][key] = value
    _check_keys(out)
    return out


def _check_keys(layer: dict):
    for section, allowed in (("system", _SYSTEM_KEYS), ("sweep", _SWEEP_KEYS), ("single", _SINGLE_KEYS)):
        unknown = set(layer.get(section, {})) - allowed
        if unknown:
            raise ConfigError(f"unknown {section} key(s): {', '.join(sorted(unknown))}")


def parse_override(text: str) -> tuple:
    """``"key=value"`` to ``(section, key, value)``; values use TOML syntax, else stay strings."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, value = (s.strip() for s in text.split("=", 1))
    section, _, name = key.rpartition(".")
    section = section or "system"
    try:
        parsed = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value
    return section, name, parsed


def _apply_system(base: dict, layer: dict) -> dict:
    if "snr_db" in layer and "total_energy" in layer:
        raise ConfigError("set either snr_db or total_energy, not both")
    merged = dict(base)
    if "snr_db" in layer:
        merged.pop("total_energy", None)
    if "total_energy" in layer:
        merged.pop("snr_db", None)
    merged.update(layer)
    return merged


def resolve_config(path=None, overrides=(), seed=None) -> tuple:
    """Layer defaults, file and ``--set`` overrides into a config plus section dicts.

    Returns ``(SystemConfig, sweep_dict, single_dict)``.
    """
    layers = [load_config_file(path)] if path else []
    ov = {"system": {}, "sweep": {}, "single": {}}
    for item in overrides:
        section, key, value = parse_override(item)
        if section not in ov:
            raise ConfigError(f"unknown override section {section!r}")
        ov[section][key] = value
    _check_keys(ov)
    layers.append(ov)
    system, sweep, single = {}, {}, {}
    for layer in layers:
        system = _apply_system(system, layer["system"])
        sweep.update(layer["sweep"])
        single.update(layer["single"])
    snr = system.pop("snr_db", None)
    try:
        cfg = SystemConfig(**system)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if snr is not None:
        cfg = cfg.replace(total_energy=energy_from_snr(float(snr), cfg.total_length, cfg.noise_power))
    if seed is None and os.environ.get("JCAS_SEED"):
        try:
            seed = int(os.environ["JCAS_SEED"])
        except ValueError:
            raise ConfigError(f"JCAS_SEED must be an integer, got {os.environ['JCAS_SEED']!r}") from None
    if seed is not None:
        cfg = cfg.replace(seed=int(seed))
    return cfg, sweep, single


def _schemes(names, default):
    if names is None:
        return tuple(default)
    if isinstance(names, str):
        names = [names]
    return tuple(Scheme.parse(str(n)) for n in names)


def _trials(args, sweep: dict) -> int:
    if args.trials is not None:
        n = args.trials
    elif args.paper_trials:
        n = PAPER_TRIALS
    else:
        n = int(sweep.get("trials", DEFAULT_TRIALS))
    if n < 1:
        raise ConfigError(f"trials must be >= 1, got {n}")
    return n


def _fmt(x: float) -> str:
    return f"{x:12.6g}"


def cmd_single(args, cfg, sweep, single) -> int:
    schemes = _schemes(single.get("schemes"), ALL_SCHEMES)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    reports = run_trial_schemes(cfg, schemes, rng)
    meta = {"config": cfg.to_dict(), "snr_db": cfg.snr_db, "schemes": [s.label for s in schemes]}
    chash = config_hash_of(meta)
    print(f"# config_hash={chash} seed={cfg.seed} snr_db={cfg.snr_db:g}")
    print(f"{'scheme':<16}" + "".join(f"{c:>13}" for c in REPORT_COLUMNS))
    for s, r in zip(schemes, reports):
        print(f"{s.label:<16}" + "".join(" " + _fmt(getattr(r, c)) for c in REPORT_COLUMNS))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "single.json")
    payload = dict(meta, config_hash=chash, seed=cfg.seed,
                   reports={s.label: r.as_dict() for s, r in zip(schemes, reports)})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_sweep(args, cfg, sweep, single) -> int:
    if "axis" not in sweep or "values" not in sweep:
        raise ConfigError("sweep needs 'axis' and 'values' (a [sweep] table or --set sweep.axis=...)")
    values = sweep["values"]
    if not isinstance(values, list):
        raise ConfigError("sweep values must be a list")
    spec = SweepSpec(str(sweep["axis"]), tuple(values), _trials(args, sweep),
                     _schemes(sweep.get("schemes"), ALL_SCHEMES), cfg)
    result = run_sweep(spec, seed=cfg.seed, threads=args.threads)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, f"sweep_{spec.axis}")
    result.write_csv(stem + ".csv")
    result.write_json(stem + ".json")
    print(f"wrote {stem}.csv ({len(result.rows)} rows, config_hash={result.config_hash})")
    return EXIT_OK


def cmd_figures(args, cfg, sweep, single) -> int:
    run_figures(args.out, base=cfg, trials=_trials(args, sweep), seed=cfg.seed, threads=args.threads, log=print)
    return EXIT_OK


def cmd_oracle_check(args, cfg, sweep, single) -> int:
    start = time.perf_counter()
    results = run_all(seed=cfg.seed, inject_fault=args.inject_fault)
    elapsed = time.perf_counter() - start
    for r in results:
        print(r.line())
    if elapsed > ORACLE_SOFT_BUDGET_S:
        print(f"warning: oracle checks took {elapsed:.1f} s (budget {ORACLE_SOFT_BUDGET_S:.0f} s)", file=sys.stderr)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} oracles passed in {elapsed:.1f} s")
    return EXIT_ORACLE if failed else EXIT_OK


_COMMANDS = {"single": cmd_single, "sweep": cmd_sweep, "figures": cmd_figures, "oracle-check": cmd_oracle_check}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jcas", description="JCAS waveform design simulator")
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", help="TOML scenario file")
    p.add_argument("--seed", type=int, help="master seed (falls back to JCAS_SEED, then the config)")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials per sweep point")
    p.add_argument("--paper-trials", action="store_true", help=f"use {PAPER_TRIALS} trials per sweep point")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key; repeatable")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg, sweep, single = resolve_config(args.config, args.overrides, args.seed)
        return _COMMANDS[args.command](args, cfg, sweep, single)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except JcasError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
