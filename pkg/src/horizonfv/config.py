"""Run configuration: a plain key-value format with sections.

Everything a run needs lives in one INI-style file; no environment
variables and no positional tuning flags, so a config plus a seed pins an
experiment exactly.  Unknown sections or keys are rejected by name (with
the line number when it can be located), type errors and constraint
violations name the offending key, and the fully resolved configuration
(defaults applied) is echoed into the output directory for provenance.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import DEFAULT_KRUZHKOV_LEVELS, FluxModel, burgers_model, polynomial_model
from .scheme import COPY_BOUNDARY, OuterBoundary, fixed_boundary

_FLUXES = ("godunov", "eo", "rusanov")
_PRESET_NAMES = ("smooth", "riemann", "flat")


@dataclass
class RunConfig:
    """Typed, validated run configuration with defaults applied."""

    # [model]
    model: str = "burgers"
    f_coeffs: tuple = (-0.5, 0.0, 0.5)
    h_coeffs: tuple = (0.0,)
    # [geometry]
    mass: float = 1.0
    r_max: float = 12.0
    cells: int = 200
    outer_boundary: str = "copy"
    # [evolution]
    flux: str = "godunov"
    cfl_fraction: float = 0.9
    t_end: float = 1.0
    snapshot_every: int = 10
    # [initial]
    initial_kind: str = "bump"
    initial_constant: float = 0.5
    initial_left: float = 0.8
    initial_right: float = -0.4
    initial_jump_r: float = 7.0
    initial_amplitude: float = 0.5
    initial_center: float = 6.0
    initial_width: float = 1.0
    # [diagnostics]
    entropy_diagnostics: bool = False
    kruzhkov_levels: tuple = DEFAULT_KRUZHKOV_LEVELS
    # [run]
    seed: int = 0
    output_dir: str = "out"
    # [characteristics]
    char_r0: float = 8.0
    char_u0: float = 0.6
    char_ds: float = 1e-3
    char_s_max: float = 5.0
    char_r_stop: float = 120.0
    coordinates: str = "exterior"
    interior_shift: float = 0.5
    # [steady]
    steady_r0: float = 4.0
    steady_u0: float = 0.9
    # [converge]
    converge_preset: str = "smooth"
    converge_levels: int = 4
    # [oracle]
    oracle_preset: str = "smooth"
    oracle_cells: int = 400
    # [fuzz]
    fuzz_trials: int = 100
    fuzz_tau_scale: float = 1.0

    def build_model(self) -> FluxModel:
        if self.model == "burgers":
            return burgers_model()
        return polynomial_model("custom", self.f_coeffs, self.h_coeffs)

    def build_outer_boundary(self) -> OuterBoundary:
        if self.outer_boundary == "copy":
            return COPY_BOUNDARY
        return fixed_boundary(float(self.outer_boundary.split(":", 1)[1]))

    def build_v0(self):
        if self.initial_kind == "constant":
            c = self.initial_constant
            return lambda r: np.full_like(np.asarray(r, dtype=float), c)
        if self.initial_kind == "riemann":
            left, right, jump = self.initial_left, self.initial_right, self.initial_jump_r
            return lambda r: np.where(np.asarray(r, dtype=float) < jump, left, right)
        amp, center, width = self.initial_amplitude, self.initial_center, self.initial_width
        return lambda r: amp * np.exp(-np.square((np.asarray(r, dtype=float) - center) / width))


# section -> key -> (attribute, parser)
_SCHEMA = {
    "model": {
        "model": ("model", "str"),
        "f_coeffs": ("f_coeffs", "floats"),
        "h_coeffs": ("h_coeffs", "floats"),
    },
    "geometry": {
        "mass": ("mass", "float"),
        "r_max": ("r_max", "float"),
        "cells": ("cells", "int"),
        "outer_boundary": ("outer_boundary", "str"),
    },
    "evolution": {
        "flux": ("flux", "str"),
        "cfl_fraction": ("cfl_fraction", "float"),
        "t_end": ("t_end", "float"),
        "snapshot_every": ("snapshot_every", "int"),
    },
    "initial": {
        "kind": ("initial_kind", "str"),
        "constant": ("initial_constant", "float"),
        "left": ("initial_left", "float"),
        "right": ("initial_right", "float"),
        "jump_r": ("initial_jump_r", "float"),
        "amplitude": ("initial_amplitude", "float"),
        "center": ("initial_center", "float"),
        "width": ("initial_width", "float"),
    },
    "diagnostics": {
        "entropy_diagnostics": ("entropy_diagnostics", "bool"),
        "kruzhkov_levels": ("kruzhkov_levels", "floats"),
    },
    "run": {
        "seed": ("seed", "int"),
        "output_dir": ("output_dir", "str"),
    },
    "characteristics": {
        "r0": ("char_r0", "float"),
        "u0": ("char_u0", "float"),
        "ds": ("char_ds", "float"),
        "s_max": ("char_s_max", "float"),
        "r_stop": ("char_r_stop", "float"),
        "coordinates": ("coordinates", "str"),
        "interior_shift": ("interior_shift", "float"),
    },
    "steady": {
        "r0": ("steady_r0", "float"),
        "u0": ("steady_u0", "float"),
    },
    "converge": {
        "preset": ("converge_preset", "str"),
        "levels": ("converge_levels", "int"),
    },
    "oracle": {
        "preset": ("oracle_preset", "str"),
        "cells": ("oracle_cells", "int"),
    },
    "fuzz": {
        "trials": ("fuzz_trials", "int"),
        "tau_scale": ("fuzz_tau_scale", "float"),
    },
}

_REQUIRED = (("geometry", "mass"), ("geometry", "r_max"), ("geometry", "cells"),
             ("evolution", "t_end"))


def _find_line(text: str, token: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(token):
            return i
    return None


def _convert(raw: str, kind: str, where: str):
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            value = float(raw)
            if value != int(value):
                raise ValueError("not an integer")
            return int(value)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError("not a boolean")
        if kind == "floats":
            parts = [p for p in raw.replace(",", " ").split() if p]
            if not parts:
                raise ValueError("empty list")
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind} ({exc})") from None


def _validate(cfg: RunConfig) -> None:
    def fail(key: str, message: str):
        raise ConfigError(f"{key}: {message}")

    if cfg.model not in ("burgers", "custom"):
        fail("model.model", f"must be 'burgers' or 'custom', got {cfg.model!r}")
    if len(cfg.f_coeffs) > 9 or len(cfg.h_coeffs) > 9:
        fail("model.f_coeffs", "polynomial degree must be <= 8")
    if not cfg.mass >= 0.0:
        fail("geometry.mass", f"mass >= 0 required, got {cfg.mass}")
    if not cfg.r_max > 2.0 * cfg.mass:
        fail("geometry.r_max", f"r_max must exceed 2*mass = {2 * cfg.mass}")
    if cfg.cells < 2:
        fail("geometry.cells", f"cells >= 2 required, got {cfg.cells}")
    if cfg.outer_boundary != "copy":
        parts = cfg.outer_boundary.split(":", 1)
        if len(parts) != 2 or parts[0] != "fixed":
            fail("geometry.outer_boundary", f"must be 'copy' or 'fixed:<value>', got {cfg.outer_boundary!r}")
        try:
            value = float(parts[1])
        except ValueError:
            fail("geometry.outer_boundary", f"fixed value {parts[1]!r} is not a number")
        if not -1.0 <= value <= 1.0:
            fail("geometry.outer_boundary", f"fixed value {value} outside [-1, 1]")
    if cfg.flux not in _FLUXES:
        fail("evolution.flux", f"must be one of {_FLUXES}, got {cfg.flux!r}")
    if not 0.0 < cfg.cfl_fraction <= 1.0:
        fail("evolution.cfl_fraction", f"must lie in (0, 1], got {cfg.cfl_fraction}")
    if not cfg.t_end > 0.0:
        fail("evolution.t_end", f"t_end > 0 required, got {cfg.t_end}")
    if cfg.snapshot_every < 1:
        fail("evolution.snapshot_every", "snapshot_every >= 1 required")
    if cfg.initial_kind not in ("constant", "riemann", "bump"):
        fail("initial.kind", f"must be 'constant', 'riemann' or 'bump', got {cfg.initial_kind!r}")
    for key, val in (("initial.constant", cfg.initial_constant), ("initial.left", cfg.initial_left),
                     ("initial.right", cfg.initial_right), ("initial.amplitude", cfg.initial_amplitude)):
        if not -1.0 <= val <= 1.0:
            fail(key, f"state value {val} outside [-1, 1]")
    if not cfg.initial_width > 0.0:
        fail("initial.width", "width > 0 required")
    for k in cfg.kruzhkov_levels:
        if not -1.0 <= k <= 1.0:
            fail("diagnostics.kruzhkov_levels", f"level {k} outside [-1, 1]")
    if not cfg.char_ds > 0.0:
        fail("characteristics.ds", "ds > 0 required")
    if not cfg.char_s_max > 0.0:
        fail("characteristics.s_max", "s_max > 0 required")
    if cfg.coordinates not in ("exterior", "interior"):
        fail("characteristics.coordinates", f"must be 'exterior' or 'interior', got {cfg.coordinates!r}")
    if not abs(cfg.char_u0) <= 1.0:
        fail("characteristics.u0", f"|u0| <= 1 required, got {cfg.char_u0}")
    if cfg.steady_u0 == 0.0 or not abs(cfg.steady_u0) < 1.0:
        fail("steady.u0", f"u0 must be nonzero with |u0| < 1, got {cfg.steady_u0}")
    if cfg.converge_preset not in _PRESET_NAMES:
        fail("converge.preset", f"must be one of {_PRESET_NAMES}, got {cfg.converge_preset!r}")
    if cfg.converge_levels < 3:
        fail("converge.levels", "levels >= 3 required")
    if cfg.oracle_preset not in _PRESET_NAMES:
        fail("oracle.preset", f"must be one of {_PRESET_NAMES}, got {cfg.oracle_preset!r}")
    if cfg.oracle_cells < 2:
        fail("oracle.cells", "cells >= 2 required")
    if cfg.fuzz_trials < 1:
        fail("fuzz.trials", "trials >= 1 required")
    if not 0.0 < cfg.fuzz_tau_scale <= 1.0:
        fail("fuzz.tau_scale", "tau_scale must lie in (0, 1]; steps beyond the stability bound are rejected")


def parse_config(path) -> RunConfig:
    """Parse and validate a configuration file; defaults fill missing keys."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None

    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    cfg = RunConfig()
    seen = set()
    for section in parser.sections():
        if section not in _SCHEMA:
            line = _find_line(text, f"[{section}]")
            at = f" (line {line})" if line else ""
            raise ConfigError(f"unknown section [{section}]{at}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                line = _find_line(text, key)
                at = f" (line {line})" if line else ""
                raise ConfigError(f"unknown key '{key}' in section [{section}]{at}")
            attr, kind = _SCHEMA[section][key]
            setattr(cfg, attr, _convert(raw, kind, f"{section}.{key}"))
            seen.add((section, key))

    missing = [f"{s}.{k}" for s, k in _REQUIRED if (s, k) not in seen]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    _validate(cfg)
    return cfg


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, tuple):
        return ", ".join(f"{v:.17g}" for v in value)
    return str(value)


def resolved_config_text(cfg: RunConfig) -> str:
    """Canonical dump of the fully resolved configuration."""
    attr_of = {attr: (section, key) for section, keys in _SCHEMA.items()
               for key, (attr, _) in keys.items()}
    lines = []
    for section in _SCHEMA:
        lines.append(f"[{section}]")
        for key, (attr, _) in _SCHEMA[section].items():
            lines.append(f"{key} = {_format_value(getattr(cfg, attr))}")
        lines.append("")
    assert all(f.name in attr_of for f in fields(cfg)), "schema drifted from RunConfig"
    return "\n".join(lines)
