"""Experiment configuration: TOML files with a ``schema_version`` key.

Example::

    schema_version = 1
    experiment = "proto-smooth"
    seed = 7

    [group]
    preset = "prototype"          # or: B = [[0.0, 0.0], [1.0, 0.0]]  layers = [1, 1]

    [field]
    name = "sin_cos_poly"

    [converge]
    orders = [0, 1, 2, 3, 4]
    alpha = 1.0
    anchor = [0.3, 0.2, -0.4]
    rho_max = 0.1
    rho_min = 0.001
    rho_count = 12
    directions = 8

    [output]
    path = "converge.csv"
    format = "csv"
"""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, KolmoError
from .fields import ScalarField, get_field
from .group import GroupSpec, chain, prototype, validate

SCHEMA_VERSION = 1
CONFIG_DIR_ENV = "KOLMOTAYLOR_CONFIG_DIR"


def _chain3() -> GroupSpec:
    return chain((1, 1, 1), [[[1.0]], [[1.0]]])


def _wide() -> GroupSpec:
    return chain((2, 1), [[[1.0, 0.0]]])


def _kolmogorov_r3() -> GroupSpec:
    return chain((3, 2, 2, 1), [
        [[1.0, 0.5, 0.0], [0.0, 1.0, -0.5]],
        [[1.0, 0.2], [-0.3, 1.0]],
        [[0.7, 1.0]],
    ])


PRESETS = {
    "prototype": prototype,
    "langevin": prototype,
    "chain3": _chain3,
    "wide": _wide,
    "kolmogorov_r3": _kolmogorov_r3,
}


@dataclass
class ExperimentConfig:
    group: GroupSpec
    group_name: str = "prototype"
    field_name: str = "sin_cos_poly"
    field_params: dict = field(default_factory=dict)
    orders: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    alpha: float = 1.0
    anchor: np.ndarray | None = None
    rho_grid: np.ndarray = field(default_factory=lambda: np.geomspace(1e-1, 1e-3, 12))
    directions: int = 8
    equal_time: bool = False
    tolerance: float = 0.15
    dps: int | None = 50
    seed: int = 0
    experiment: str = "experiment"
    output_path: str | None = None
    output_format: str = "csv"
    sections: dict = field(default_factory=dict)

    def make_field(self) -> ScalarField:
        return get_field(self.field_name, self.group, **self.field_params)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})


def group_from_table(table: dict) -> tuple[GroupSpec, str]:
    if "preset" in table:
        name = table["preset"]
        if name not in PRESETS:
            raise ConfigError(f"[group] preset: unknown preset {name!r} (known: {', '.join(sorted(PRESETS))})")
        return PRESETS[name](), name
    if "B" not in table or "layers" not in table:
        raise ConfigError("[group] needs either 'preset' or both 'B' and 'layers'")
    try:
        spec = validate(table["B"], table["layers"])
    except KolmoError as exc:
        raise type(exc)(f"[group] {exc}") from exc
    return spec, "custom"


def _float_list(value, where: str) -> np.ndarray:
    try:
        return np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected a list of numbers") from exc


def from_dict(raw: dict, name: str = "experiment") -> ExperimentConfig:
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version!r} (expected {SCHEMA_VERSION})")
    spec, group_name = group_from_table(raw.get("group", {"preset": "prototype"}))
    fld = raw.get("field", {})
    conv = raw.get("converge", {})
    out = raw.get("output", {})

    cfg = ExperimentConfig(group=spec, group_name=group_name)
    cfg.experiment = str(raw.get("experiment", name))
    cfg.seed = int(raw.get("seed", 0))
    cfg.field_name = fld.get("name", cfg.field_name)
    cfg.field_params = {k: float(v) for k, v in fld.items() if k == "c"}

    cfg.orders = [int(n) for n in conv.get("orders", cfg.orders)]
    if any(n < 0 for n in cfg.orders):
        raise ConfigError("[converge] orders: must be nonnegative")
    cfg.alpha = float(conv.get("alpha", cfg.alpha))
    if not 0 < cfg.alpha <= 1:
        raise ConfigError("[converge] alpha: must lie in (0, 1]")
    if "anchor" in conv:
        cfg.anchor = _float_list(conv["anchor"], "[converge] anchor")
    if "rho_grid" in conv:
        cfg.rho_grid = _float_list(conv["rho_grid"], "[converge] rho_grid")
    elif any(k in conv for k in ("rho_max", "rho_min", "rho_count")):
        cfg.rho_grid = np.geomspace(float(conv.get("rho_max", 1e-1)), float(conv.get("rho_min", 1e-3)),
                                    int(conv.get("rho_count", 12)))
    if np.any(cfg.rho_grid <= 0) or np.any(np.diff(cfg.rho_grid) >= 0):
        raise ConfigError("[converge] rho_grid: radii must be positive and strictly decreasing")
    cfg.directions = int(conv.get("directions", cfg.directions))
    cfg.equal_time = bool(conv.get("equal_time", cfg.equal_time))
    cfg.tolerance = float(conv.get("tolerance", cfg.tolerance))
    dps = conv.get("dps", cfg.dps)
    cfg.dps = int(dps) if dps else None

    cfg.output_path = out.get("path")
    cfg.output_format = out.get("format", "csv")
    if cfg.output_format not in ("csv", "json"):
        raise ConfigError(f"[output] format: expected csv or json, got {cfg.output_format!r}")
    cfg.sections = {k: v for k, v in raw.items() if isinstance(v, dict)}

    if cfg.anchor is not None and len(cfg.anchor) != spec.d + 1:
        raise ConfigError(f"[converge] anchor: needs {spec.d + 1} coordinates")
    if "field" not in raw:
        return cfg
    try:
        u = cfg.make_field()
    except KolmoError as exc:
        raise ConfigError(f"[field] {exc}") from exc
    if cfg.anchor is not None and u.is_singular(cfg.anchor) and max(cfg.orders) > u.smoothness:
        raise ConfigError(f"[converge] anchor lies on the singular set of {cfg.field_name!r}")
    return cfg


def resolve_path(path: str | os.PathLike) -> Path:
    """Use ``path`` as given, else look it up in $KOLMOTAYLOR_CONFIG_DIR."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base and (Path(base) / p).exists():
        return Path(base) / p
    return p


def load(path: str | os.PathLike) -> ExperimentConfig:
    p = resolve_path(path)
    try:
        raw = tomllib.loads(p.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return from_dict(raw, name=p.stem)
