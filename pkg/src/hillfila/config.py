"""Scenario configuration: a flat INI file with [scenario], [numerics] and [output]."""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import get_type_hints

SCENARIOS = ("hill", "prolate", "oblate", "seeded-segment", "front-peak", "smooth-hill")
BLOB_SCENARIOS = ("front-peak", "smooth-hill")


class ConfigError(ValueError):
    pass


def _section(name):
    return {"section": name}


@dataclass(frozen=True)
class ScenarioConfig:
    # [scenario]
    scenario: str = field(default="hill", metadata=_section("scenario"))
    a: float = field(default=0.0, metadata=_section("scenario"))
    b: float = field(default=0.0, metadata=_section("scenario"))
    match_volume: bool = field(default=True, metadata=_section("scenario"))
    delta_margin: float = field(default=0.0, metadata=_section("scenario"))
    bump_width: float = field(default=0.5, metadata=_section("scenario"))
    base: str = field(default="ball", metadata=_section("scenario"))
    mollify: float = field(default=0.05, metadata=_section("scenario"))
    m_peak: float = field(default=20.0, metadata=_section("scenario"))
    r0: float = field(default=0.05, metadata=_section("scenario"))
    sigma: float = field(default=0.02, metadata=_section("scenario"))
    nodes: int = field(default=128, metadata=_section("scenario"))
    # [numerics]
    dt: float = field(default=0.02, metadata=_section("numerics"))
    t_end: float = field(default=2.0, metadata=_section("numerics"))
    h_min: float = field(default=0.0125, metadata=_section("numerics"))
    h_max: float = field(default=0.05, metadata=_section("numerics"))
    curvature_budget: float = field(default=0.1, metadata=_section("numerics"))
    h_quad: float = field(default=1.0 / 64.0, metadata=_section("numerics"))
    floor_levels: int = field(default=6, metadata=_section("numerics"))
    max_nodes: int = field(default=20000, metadata=_section("numerics"))
    frozen_stage_mask: bool = field(default=False, metadata=_section("numerics"))
    blob_spacing: float = field(default=1.0 / 32.0, metadata=_section("numerics"))
    peak_spacing: float = field(default=0.005, metadata=_section("numerics"))
    core_factor: float = field(default=2.0, metadata=_section("numerics"))
    h_energy: float = field(default=0.0, metadata=_section("numerics"))
    h_ins: float = field(default=0.01, metadata=_section("numerics"))
    h_probe: float = field(default=1.0 / 256.0, metadata=_section("numerics"))
    bracket: float = field(default=0.5, metadata=_section("numerics"))
    observe_every: int = field(default=5, metadata=_section("numerics"))
    snapshot_every: int = field(default=25, metadata=_section("numerics"))
    # [output]
    out: str = field(default="out", metadata=_section("output"))
    margin: float = field(default=0.1, metadata=_section("output"))
    trace_dt: float = field(default=0.05, metadata=_section("output"))

    @property
    def is_blob(self) -> bool:
        return self.scenario in BLOB_SCENARIOS

    def resolved(self) -> "ScenarioConfig":
        """Fill scenario-dependent defaults (0 means 'pick for me')."""
        c = self
        if c.delta_margin == 0:
            c = replace(c, delta_margin=0.25 if c.scenario == "prolate" else 0.2)
        if c.scenario in ("prolate", "oblate"):
            a = c.a or (0.9 if c.scenario == "prolate" else 1.1)
            b = 1.0 / (a * a) if c.match_volume or c.b == 0 else c.b
            c = replace(c, a=a, b=b)
        if c.h_energy == 0:
            c = replace(c, h_energy=2.0 * c.h_quad)
        c.validate()
        return c

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        positive = ("dt", "h_min", "h_max", "curvature_budget", "h_quad", "blob_spacing",
                    "peak_spacing", "core_factor", "h_ins", "h_probe", "bracket", "mollify",
                    "sigma", "bump_width", "trace_dt")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative")
        if self.h_min >= self.h_max:
            raise ConfigError("h_min must be smaller than h_max")
        if self.nodes < 8:
            raise ConfigError("nodes must be at least 8")
        if self.observe_every < 1 or self.snapshot_every < 0:
            raise ConfigError("observe_every >= 1 and snapshot_every >= 0 required")
        for name in ("a", "b", "delta_margin", "h_energy"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be positive (0 selects the default)")
        if self.base not in ("ball", "seeded-segment"):
            raise ConfigError("base must be 'ball' or 'seeded-segment'")
        if self.scenario in ("prolate", "oblate") and not (self.a > 0 and self.b > 0):
            return  # unresolved spheroid axes
        if self.scenario == "prolate" and not self.a < self.b:
            raise ConfigError(f"prolate needs a < b (got a={self.a}, b={self.b})")
        if self.scenario == "oblate" and not self.a > self.b:
            raise ConfigError(f"oblate needs a > b (got a={self.a}, b={self.b})")
        if self.scenario == "front-peak" and not (self.m_peak > 0 and self.r0 > 0):
            raise ConfigError("front-peak needs m_peak > 0 and r0 > 0")


_TYPES = get_type_hints(ScenarioConfig)


def _to_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _from_text(name: str, text: str):
    tp = _TYPES[name]
    try:
        if tp is bool:
            low = text.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        return text.strip()
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def serialize(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    for f in fields(ScenarioConfig):
        sec = f.metadata["section"]
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp.set(sec, f.name, _to_text(getattr(cfg, f.name)))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = {f.name: f.metadata["section"] for f in fields(ScenarioConfig)}
    values = {}
    for sec in cp.sections():
        for key, val in cp.items(sec):
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown key [{sec}] {key}")
            if known[name] != sec:
                raise ConfigError(f"key {key} belongs in [{known[name]}], not [{sec}]")
            values[name] = _from_text(name, val)
    cfg = replace(base or ScenarioConfig(), **values)
    cfg.validate()
    return cfg


def load(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse(text, base)


def as_dict(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)
