"""Flat ``key = value`` run configuration with dotted section keys.

Example::

    # comments start with '#'
    physical.g2 = 0.05
    physical.B = 0.3
    numeric.cutoff0 = 24
    sweep.z0 = 0.5, 1, 2          # explicit list
    sweep.Psi0 = 0:6.283185307:16:open   # start:stop:count[:open]

Unknown keys, malformed values and invalid combinations raise
:class:`~so32bec.errors.ConfigurationError` naming the line or field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .meanfield import PhysicalParams, SolverOptions
from .states import CoherentParams, DisplacementParams

__all__ = [
    "NumericOptions",
    "StateOptions",
    "RunConfig",
    "SWEEP_NAMES",
    "parse_config",
    "load_config",
    "parse_grid",
    "validate",
    "with_overrides",
]

SWEEP_NAMES = ("B", "g2V0", "z0", "r0", "Theta0", "Psi0", "delta0")


@dataclass(frozen=True)
class NumericOptions:
    cutoff0: int = 24
    cutoffk: int = 8
    margin: int = 2
    leakage_gate: float = 1e-8
    tol: float = 1e-9
    oracle_tol: float = 1e-6
    diag_tol: float = 1e-6
    diag_cutoff: int = 10
    transform_cutoff: int = 12
    draws: int = 2
    seed: int = 0
    k: int = 1


@dataclass(frozen=True)
class StateOptions:
    z0: float = 1.0
    delta0: float = 0.0
    r0: float = 0.5
    theta0: float = 0.0
    psi0: float = 0.0
    phi0: float = 0.0

    def coherent(self) -> CoherentParams:
        return CoherentParams(self.r0, self.psi0, self.theta0, self.phi0)

    def displacement(self) -> DisplacementParams:
        return DisplacementParams.symmetric(self.z0, self.delta0)


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    numeric: NumericOptions = field(default_factory=NumericOptions)
    solver: SolverOptions = field(default_factory=SolverOptions)
    state: StateOptions = field(default_factory=StateOptions)
    sweep: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    output_format: str = "csv"
    oracle_every: int = 10

    def echo(self) -> dict:
        """Plain-data view of the configuration for report metadata."""
        phys = {f.name: getattr(self.physical, f.name) for f in fields(self.physical)}
        phys["eps"] = {str(k): v for k, v in sorted(self.physical.eps.items())}
        return {
            "physical": phys,
            "numeric": {f.name: getattr(self.numeric, f.name) for f in fields(self.numeric)},
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
            "state": {f.name: getattr(self.state, f.name) for f in fields(self.state)},
            "sweep": {k: list(v) for k, v in self.sweep.items()},
            "output": {"format": self.output_format, "oracle_every": self.oracle_every},
        }


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:count[:open]`` (linear, endpoint included unless ``open``) or ``a, b, c``."""
    text = text.strip()
    if ":" in text:
        parts = [p.strip() for p in text.split(":")]
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "open"):
            raise ValueError(f"grid {text!r} must be start:stop:count[:open]")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError(f"grid {text!r} is empty")
        return tuple(float(x) for x in np.linspace(start, stop, count, endpoint=len(parts) == 3))
    values = tuple(float(x) for x in text.split(",") if x.strip())
    if not values:
        raise ValueError("grid is empty")
    return values


_SECTIONS = {
    "physical": {f.name: f.type for f in fields(PhysicalParams) if f.name != "eps"},
    "numeric": {f.name: f.type for f in fields(NumericOptions)},
    "solver": {f.name: f.type for f in fields(SolverOptions)},
    "state": {f.name: f.type for f in fields(StateOptions)},
}
_PHYSICAL_SHORTHAND = ("g2", "g2V0")


def _convert(kind, raw: str):
    if kind in (int, "int"):
        f = float(raw)
        if f != int(f):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(f)
    return float(raw)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse configuration text; later validation errors name the offending field."""
    values: dict[str, dict[str, object]] = {s: {} for s in _SECTIONS}
    eps: dict[int, float] = {}
    sweep: dict[str, tuple[float, ...]] = {}
    output: dict[str, object] = {}
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigurationError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key in seen:
            raise ConfigurationError(f"{where}: duplicate key {key!r}")
        seen.add(key)
        section, _, name = key.partition(".")
        try:
            if section == "sweep":
                if name not in SWEEP_NAMES:
                    raise ConfigurationError(f"{where}: unknown sweep parameter {name!r} (choose from {', '.join(SWEEP_NAMES)})")
                sweep[name] = parse_grid(raw)
            elif section == "output":
                if name == "format":
                    output["format"] = raw
                elif name == "oracle_every":
                    output["oracle_every"] = _convert(int, raw)
                else:
                    raise ConfigurationError(f"{where}: unknown output key {name!r}")
            elif section == "physical" and name.startswith("eps."):
                eps[int(name[4:])] = float(raw)
            elif section == "physical" and name in _PHYSICAL_SHORTHAND:
                values["physical"][name] = float(raw)
            elif section in _SECTIONS and name in _SECTIONS[section]:
                values[section][name] = _convert(_SECTIONS[section][name], raw)
            else:
                raise ConfigurationError(f"{where}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"{where}: bad value for {key!r}: {exc}") from None
    return _build(values, eps, sweep, output)


def _build(values, eps, sweep, output) -> RunConfig:
    phys = dict(values["physical"])
    g2 = phys.pop("g2", None)
    g2v0 = phys.pop("g2V0", None)
    if g2 is not None and g2v0 is not None:
        raise ConfigurationError("physical.g2 and physical.g2V0 are mutually exclusive")
    if (g2 is not None or g2v0 is not None) and ("g_n" in phys or "g_s" in phys):
        raise ConfigurationError("physical.g2/g2V0 cannot be combined with physical.g_n or physical.g_s")
    if g2v0 is not None:
        g2 = g2v0 / phys.get("V0", 1.0)
    if g2 is not None:
        phys.update(g_n=g2, g_s=0.0)
    physical = PhysicalParams(eps=eps, **phys)
    solver = SolverOptions(**values["solver"])
    numeric = NumericOptions(**values["numeric"])
    state = StateOptions(**values["state"])
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"output.format must be csv or json, got {fmt!r}")
    cfg = RunConfig(physical, numeric, solver, state, sweep, fmt, int(output.get("oracle_every", 10)))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    n = cfg.numeric
    for name in ("leakage_gate", "tol", "oracle_tol", "diag_tol"):
        x = getattr(n, name)
        if not (x > 0 and math.isfinite(x)):
            raise ConfigurationError(f"numeric.{name} must be a positive tolerance, got {x}")
    for name in ("cutoff0", "cutoffk", "diag_cutoff", "transform_cutoff"):
        if getattr(n, name) < 1:
            raise ConfigurationError(f"numeric.{name} must be >= 1")
        if n.margin >= getattr(n, name):
            raise ConfigurationError(f"numeric.margin ({n.margin}) must be smaller than numeric.{name} ({getattr(n, name)})")
    if n.margin < 0:
        raise ConfigurationError("numeric.margin must be >= 0")
    if n.draws < 0 or n.k < 1:
        raise ConfigurationError("numeric.draws must be >= 0 and numeric.k >= 1")
    if cfg.oracle_every < 1:
        raise ConfigurationError(f"oracle_every must be >= 1, got {cfg.oracle_every}")
    if cfg.state.r0 < 0 or cfg.state.z0 < 0:
        raise ConfigurationError("state.r0 and state.z0 must be >= 0")


def load_config(path: str | Path | None) -> RunConfig:
    """Read a configuration file; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config(text, str(p))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    out = replace(cfg, **{k: v for k, v in kw.items() if v is not None})
    validate(out)
    return out

