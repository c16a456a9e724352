"""Slit-width sweep runner with deterministic CSV/JSON output.

Resolves a sweep configuration from defaults, an optional preset, an
optional flat JSON config file, and command-line flags -- in that
precedence order (later wins).  Each row of the sweep reports the
quadrature spread, the matching closed form when one applies, and
optionally a Monte Carlo cross-check; identical configurations produce
byte-identical output files.

Exit codes: 0 success, 1 usage/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .conditioning import Central, Conditioned, Inclusive, SlitConfig
from .observables import (
    DegenerateDensityError,
    cd_small_a_formula,
    id_formula,
    physical_slit_estimate,
    spread,
)
from .oracle import (
    EnvelopeViolationError,
    InsufficientAcceptanceError,
    OracleConfig,
    sample_central,
    sample_inclusive,
)
from .quadrature import QuadratureSpec, ToleranceError
from .state import GaussianPairState

__all__ = [
    "ConfigError",
    "SweepConfig",
    "SweepRow",
    "parse_config",
    "run_sweep",
    "emit",
    "main",
]


class ConfigError(ValueError):
    """Invalid or inconsistent sweep configuration."""


_DEFAULTS: dict = {
    "preset": None,
    "sigma_plus": 1.0,
    "sigma_minus": 1.0,
    "scheme": "central",
    "kappa": None,
    "a_min": 0.1,
    "a_max": 1.0,
    "a_steps": 10,
    "spacing": "linear",
    "rel_tol": 1e-10,
    "tail_cutoff": 10.0,
    "mc_samples": None,
    "seed": 0,
    "format": "csv",
    "out": "sweep.csv",
}

_PRESETS: dict[str, dict] = {
    # equal widths: every scheme gives the same slit-independent spread
    "symmetric": {"sigma_plus": 1.0, "sigma_minus": 1.0},
    # strongly anticorrelated pair scanned over sub-mm slits (units: mm)
    "strekalov": {"sigma_plus": 0.01, "sigma_minus": 1.0,
                  "a_min": 0.05, "a_max": 0.55, "scheme": "central"},
}

_SCHEMES = ("central", "inclusive", "conditioned")
_SPACINGS = ("linear", "log")
_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class SweepConfig:
    sigma_plus: float
    sigma_minus: float
    scheme: str
    kappa: float | None
    a_min: float
    a_max: float
    a_steps: int
    spacing: str
    rel_tol: float
    tail_cutoff: float
    mc_samples: int | None
    seed: int
    format: str
    out: str
    preset: str | None
    preset_overrides: tuple[str, ...]


@dataclass(frozen=True)
class SweepRow:
    a: float
    scheme: str
    delta_k2_numeric: float
    delta_k2_formula: float | None
    mean_k2: float
    numeric_error: float
    mc_std: float | None
    mc_std_error: float | None
    physical_slit_estimate: float


_CSV_FIELDS = ("a", "scheme", "delta_k2_numeric", "delta_k2_formula",
               "mean_k2", "numeric_error", "mc_std", "mc_std_error",
               "physical_slit_estimate")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ghostslit",
        description="Sweep the slit half-width and tabulate the right-photon "
                    "momentum spread per detection scheme.")
    p.add_argument("--config", metavar="PATH",
                   help="flat JSON file with the same keys as the flags")
    p.add_argument("--preset", choices=sorted(_PRESETS))
    p.add_argument("--sigma-plus", type=float, dest="sigma_plus")
    p.add_argument("--sigma-minus", type=float, dest="sigma_minus")
    p.add_argument("--scheme", choices=_SCHEMES)
    p.add_argument("--kappa", type=float,
                   help="left detector momentum (conditioned scheme only)")
    p.add_argument("--a-min", type=float, dest="a_min")
    p.add_argument("--a-max", type=float, dest="a_max")
    p.add_argument("--a-steps", type=int, dest="a_steps")
    p.add_argument("--spacing", choices=_SPACINGS)
    p.add_argument("--rel-tol", type=float, dest="rel_tol")
    p.add_argument("--tail-cutoff", type=float, dest="tail_cutoff")
    p.add_argument("--mc-samples", type=int, dest="mc_samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=_FORMATS)
    p.add_argument("--out", metavar="PATH")
    return p


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _positive(merged: dict, key: str) -> None:
    v = merged[key]
    _require(isinstance(v, (int, float)) and math.isfinite(v) and v > 0,
             f"{key} must be finite and > 0 (got {v!r})")


def parse_config(argv=None) -> SweepConfig:
    """Resolve a SweepConfig from flags, config file, preset, defaults."""
    args = _build_parser().parse_args(argv)

    file_values: dict = {}
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_values = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config file {args.config}: invalid JSON ({exc})") from exc
        _require(isinstance(file_values, dict),
                 "config file must hold a flat JSON object")
        unknown = set(file_values) - set(_DEFAULTS)
        _require(not unknown,
                 f"unknown config keys: {', '.join(sorted(unknown))}")
        _require("preset" not in file_values or file_values["preset"] is None
                 or file_values["preset"] in _PRESETS,
                 f"unknown preset in config file: {file_values.get('preset')!r}")

    flag_values = {k: v for k, v in vars(args).items()
                   if k != "config" and v is not None}

    preset = flag_values.get("preset", file_values.get("preset"))
    merged = dict(_DEFAULTS)
    preset_keys: set = set()
    if preset is not None:
        merged.update(_PRESETS[preset])
        preset_keys = set(_PRESETS[preset])
    merged.update(file_values)
    merged.update(flag_values)
    merged["preset"] = preset
    overrides = tuple(sorted(
        k for k in preset_keys
        if k in file_values or k in flag_values))

    for key in ("sigma_plus", "sigma_minus", "a_min", "a_max", "rel_tol"):
        _positive(merged, key)
    _require(merged["a_min"] < merged["a_max"],
             f"a_min must be < a_max (got {merged['a_min']} "
             f">= {merged['a_max']})")
    _require(isinstance(merged["a_steps"], int) and merged["a_steps"] >= 2,
             f"a_steps must be an integer >= 2 (got {merged['a_steps']!r})")
    _require(merged["spacing"] in _SPACINGS,
             f"spacing must be one of {_SPACINGS} (got {merged['spacing']!r})")
    _require(merged["scheme"] in _SCHEMES,
             f"scheme must be one of {_SCHEMES} (got {merged['scheme']!r})")
    _require(merged["format"] in _FORMATS,
             f"format must be one of {_FORMATS} (got {merged['format']!r})")
    _require(isinstance(merged["tail_cutoff"], (int, float))
             and merged["tail_cutoff"] >= 6,
             f"tail_cutoff must be >= 6 (got {merged['tail_cutoff']!r})")
    _require(isinstance(merged["seed"], int)
             and 0 <= merged["seed"] < 2 ** 64,
             f"seed must be a 64-bit unsigned integer (got {merged['seed']!r})")
    _require(isinstance(merged["out"], str) and merged["out"],
             "out must be a non-empty path")

    if merged["scheme"] == "conditioned":
        _require(merged["kappa"] is not None,
                 "conditioned scheme requires an explicit kappa")
        _require(isinstance(merged["kappa"], (int, float))
                 and math.isfinite(merged["kappa"]),
                 f"kappa must be finite (got {merged['kappa']!r})")
        _require(merged["mc_samples"] is None,
                 "mc_samples is not supported for the conditioned scheme "
                 "(no sampler for asymmetric conditioning)")
    else:
        _require(merged["kappa"] is None,
                 f"kappa only applies to the conditioned scheme "
                 f"(scheme is {merged['scheme']!r})")

    if merged["mc_samples"] is not None:
        _require(isinstance(merged["mc_samples"], int)
                 and merged["mc_samples"] >= 1000,
                 f"mc_samples must be an integer >= 1000 "
                 f"(got {merged['mc_samples']!r})")

    return SweepConfig(
        sigma_plus=float(merged["sigma_plus"]),
        sigma_minus=float(merged["sigma_minus"]),
        scheme=merged["scheme"],
        kappa=None if merged["kappa"] is None else float(merged["kappa"]),
        a_min=float(merged["a_min"]),
        a_max=float(merged["a_max"]),
        a_steps=merged["a_steps"],
        spacing=merged["spacing"],
        rel_tol=float(merged["rel_tol"]),
        tail_cutoff=float(merged["tail_cutoff"]),
        mc_samples=merged["mc_samples"],
        seed=merged["seed"],
        format=merged["format"],
        out=merged["out"],
        preset=preset,
        preset_overrides=overrides,
    )


def _slit_grid(config: SweepConfig) -> np.ndarray:
    if config.spacing == "log":
        return np.geomspace(config.a_min, config.a_max, config.a_steps)
    return np.linspace(config.a_min, config.a_max, config.a_steps)


def _formula_value(state: GaussianPairState, slit: SlitConfig,
                   scheme: str) -> float | None:
    if scheme == "inclusive":
        return id_formula(state)
    if scheme == "central":
        # expose the small-slit expansion only inside its validity range
        correction = (slit.half_width ** 2 / 12.0) * state.sdiff ** 2 / state.ssum
        if correction <= 0.1:
            return cd_small_a_formula(state, slit)
    return None


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """One SweepRow per slit width, ascending; aborts on the first
    quadrature failure naming the offending (a, scheme)."""
    state = GaussianPairState(config.sigma_plus, config.sigma_minus)
    spec = QuadratureSpec(rel_tol=config.rel_tol,
                          tail_cutoff_multiplier=config.tail_cutoff)
    if config.scheme == "central":
        scheme = Central()
    elif config.scheme == "inclusive":
        scheme = Inclusive()
    else:
        scheme = Conditioned(kappa=config.kappa)

    rows = []
    for index, a in enumerate(_slit_grid(config)):
        slit = SlitConfig(float(a))
        try:
            sp = spread(state, slit, scheme, spec)
        except ToleranceError as exc:
            raise ToleranceError(
                f"quadrature failed at a={a:.17g} scheme={scheme.label}: "
                f"{exc}", exc.best) from exc
        mc_std = mc_se = None
        if config.mc_samples is not None:
            cfg = OracleConfig(n_samples=config.mc_samples,
                               seed=(config.seed + index) % 2 ** 64)
            if config.scheme == "central":
                stats = sample_central(state, slit, cfg, spec)
            else:
                stats = sample_inclusive(state, slit, cfg)
            mc_std, mc_se = stats.std, stats.std_error_of_std
        rows.append(SweepRow(
            a=float(a),
            scheme=scheme.label,
            delta_k2_numeric=sp.delta_k2,
            delta_k2_formula=_formula_value(state, slit, config.scheme),
            mean_k2=sp.mean_k2,
            numeric_error=sp.numeric_error,
            mc_std=mc_std,
            mc_std_error=mc_se,
            physical_slit_estimate=physical_slit_estimate(slit),
        ))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.17g}"


def _metadata(config: SweepConfig) -> dict:
    meta = asdict(config)
    meta["preset_overrides"] = list(config.preset_overrides)
    meta["tool_version"] = __version__
    return meta


def emit(rows: list[SweepRow], fmt: str, path: str,
         metadata: dict | None = None) -> None:
    """Write rows as CSV (17 significant digits, lossless round-trip) or as
    a JSON object {metadata, rows}; both byte-stable for identical inputs."""
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        lines = [",".join(_CSV_FIELDS)]
        lines += [",".join(_fmt(getattr(row, f)) for f in _CSV_FIELDS)
                  for row in rows]
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        doc = {"metadata": metadata or {}, "rows": [asdict(r) for r in rows]}
        payload = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format: {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # argparse already printed usage/help
        return 0 if exc.code in (0, None) else 1

    try:
        rows = run_sweep(config)
    except (ToleranceError, DegenerateDensityError,
            InsufficientAcceptanceError, EnvelopeViolationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2

    try:
        emit(rows, config.format, config.out, _metadata(config))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(rows)} rows to {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
