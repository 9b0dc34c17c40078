"""Scenario configuration: five YAML blocks with validated defaults.

Every default here is a choice of this package (no reference values exist);
reports echo the configuration they ran with.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

import yaml

from ..profiles import ALPHA_MAX

__all__ = ["ConfigError", "GridConfig", "ModelConfig", "RunConfig", "PerturbationConfig",
           "OutputConfig", "ScenarioConfig", "parse_config", "load_config", "apply_overrides"]

PERTURBATION_TYPES = ("mode", "gaussian-packet", "random-band")
ENVELOPES = ("wall", "gaussian")
FORMATS = ("csv", "ndjson")


class ConfigError(ValueError):
    """Parse or validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors) if not isinstance(errors, str) else [errors]
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class GridConfig:
    nx: int = 64
    lx: float = 2 * math.pi
    ny: int = 256
    ly: float = 20.0
    stretch: float = 0.0


@dataclass(frozen=True)
class ModelConfig:
    u_bar: float = 1.0
    b_bar: float = 0.0
    alpha: float = 0.3
    r: float = 2.0
    tau0: float = 1.0
    C_ode: float = 1.0
    C1: float = 1.0
    damping_on: bool = True
    transport_on: bool = True
    diffusion_on: bool = True


@dataclass(frozen=True)
class RunConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    every: int = 100
    seed: int = 0
    linear: bool = False
    fit_start: float = 0.5
    rate_tol: float = 0.1
    lyapunov_drift_tol: float = 0.01
    contraction_tol: float = 0.01
    damping_margin: float = 0.05
    converge_t_end: float = 0.5
    converge_k: int = 1


@dataclass(frozen=True)
class PerturbationConfig:
    type: str = "random-band"
    amplitude: float = 1e-3
    wavenumbers: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    envelope: str = "wall"
    width: float = 2.0
    decay: float = 2.0
    secondary_amplitude: float = 1e-4


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv",)


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    run: RunConfig = field(default_factory=RunConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_(self, **blocks) -> "ScenarioConfig":
        """Return a copy with per-block overrides, e.g. ``cfg.with_(run={"dt": 1e-4})``."""
        changes = {name: replace(getattr(self, name), **vals) for name, vals in blocks.items()}
        return replace(self, **changes)


_BLOCKS = {f.name: f.default_factory for f in fields(ScenarioConfig)}


def _coerce(block: str, key: str, value: Any, proto: Any, errors: list[str]) -> Any:
    where = f"{block}.{key}"
    if isinstance(proto, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "on", "off", "1", "0"):
            return value.lower() in ("true", "on", "1")
        errors.append(f"{where}: expected a boolean, got {value!r}")
    elif isinstance(proto, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            errors.append(f"{where}: expected an integer, got {value!r}")
        else:
            return int(value)
    elif isinstance(proto, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{where}: expected a number, got {value!r}")
        else:
            return float(value)
    elif isinstance(proto, str):
        if isinstance(value, str):
            return value
        errors.append(f"{where}: expected a string, got {value!r}")
    elif isinstance(proto, tuple):
        items = value if isinstance(value, (list, tuple)) else [value]
        inner = proto[0] if proto else None
        out = []
        for item in items:
            out.append(_coerce(block, key, item, inner, errors) if inner is not None else item)
        return tuple(out)
    return proto


def _build(raw: dict[str, Any]) -> ScenarioConfig:
    errors: list[str] = []
    blocks = {}
    for name, value in raw.items():
        if name not in _BLOCKS:
            errors.append(f"{name}: unknown block (expected one of {', '.join(_BLOCKS)})")
    for name, factory in _BLOCKS.items():
        default = factory()
        given = raw.get(name) or {}
        if not isinstance(given, dict):
            errors.append(f"{name}: block must be a mapping")
            given = {}
        known = {f.name for f in fields(default)}
        vals = {}
        for key, value in given.items():
            if key not in known:
                errors.append(f"{name}.{key}: unknown key")
                continue
            vals[key] = _coerce(name, key, value, getattr(default, key), errors)
        blocks[name] = replace(default, **vals)
    cfg = ScenarioConfig(**blocks)
    errors.extend(validate(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def validate(cfg: ScenarioConfig) -> list[str]:
    """Every violated precondition, keyed by its config path."""
    e = []
    g, m, r, p, o = cfg.grid, cfg.model, cfg.run, cfg.perturbation, cfg.output
    if g.nx < 8 or g.nx & (g.nx - 1):
        e.append(f"grid.nx: must be a power of two >= 8, got {g.nx}")
    if g.ny < 16:
        e.append(f"grid.ny: must be >= 16, got {g.ny}")
    for key in ("lx", "ly"):
        if not getattr(g, key) > 0:
            e.append(f"grid.{key}: must be > 0")
    if g.stretch < 0:
        e.append("grid.stretch: must be >= 0")
    if not 0 <= m.alpha < ALPHA_MAX:
        e.append(f"model.alpha: must lie in [0, sqrt(2)/2 = {ALPHA_MAX:.6f}), got {m.alpha}")
    if not m.r > 1:
        e.append(f"model.r: must be > 1, got {m.r}")
    for key in ("tau0", "C_ode", "C1"):
        if not getattr(m, key) > 0:
            e.append(f"model.{key}: must be > 0")
    if not r.dt > 0:
        e.append("run.dt: must be > 0")
    if not r.t_end > 0:
        e.append("run.t_end: must be > 0")
    if r.every < 1:
        e.append("run.every: must be >= 1")
    if r.seed < 0:
        e.append("run.seed: must be >= 0")
    if r.fit_start < 0:
        e.append("run.fit_start: must be >= 0")
    if not r.converge_t_end > 0:
        e.append("run.converge_t_end: must be > 0")
    if p.type not in PERTURBATION_TYPES:
        e.append(f"perturbation.type: must be one of {PERTURBATION_TYPES}, got {p.type!r}")
    if p.envelope not in ENVELOPES:
        e.append(f"perturbation.envelope: must be one of {ENVELOPES}, got {p.envelope!r}")
    if p.amplitude < 0:
        e.append("perturbation.amplitude: must be >= 0")
    if p.secondary_amplitude < 0:
        e.append("perturbation.secondary_amplitude: must be >= 0")
    if not p.width > 0:
        e.append("perturbation.width: must be > 0")
    if any(k < 0 or k >= g.nx // 3 for k in p.wavenumbers):
        e.append(f"perturbation.wavenumbers: must lie in [0, nx/3) = [0, {g.nx // 3})")
    for fmt in o.formats:
        if fmt not in FORMATS:
            e.append(f"output.formats: unknown format {fmt!r}")
    return e


def _load_raw(text: str) -> dict:
    try:
        raw = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark is not None else ""
        raise ConfigError(f"parse error: {where}{getattr(exc, 'problem', exc)}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError("parse error: top level must be a mapping of blocks")
    return raw


def parse_config(text: str) -> ScenarioConfig:
    """Parse YAML text into a validated :class:`ScenarioConfig` (empty text gives defaults)."""
    return _build(_load_raw(text))


def load_config(path=None, overrides=()) -> ScenarioConfig:
    text = ""
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return _build(apply_overrides(_load_raw(text), overrides))


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``block.key=value`` strings (value parsed as YAML) to a raw mapping."""
    raw = {k: dict(v) if isinstance(v, dict) else v for k, v in raw.items()}
    errors = []
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            errors.append(f"override {item!r}: expected block.key=value")
            continue
        path, value = item.split("=", 1)
        block, key = path.strip().split(".", 1)
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError:
            parsed = value
        raw.setdefault(block, {})
        if not isinstance(raw[block], dict):
            errors.append(f"override {item!r}: block {block} is not a mapping")
            continue
        raw[block][key] = parsed
    if errors:
        raise ConfigError(errors)
    return raw
