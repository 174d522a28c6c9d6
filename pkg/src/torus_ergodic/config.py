"""Experiment configuration: a YAML mapping validated into ``ExperimentConfig``.

Example::

    dimension: 1
    frequency_radius: 2
    momentum_radius: 24
    regularity: 2.0
    symbol:
      - frequency: [2]
        profile: {kind: constant, value: 1.0}
    times: [0.3, -0.3, 2.7]
    averaging_times: [1, 2, 4, 8]
    energy_grid: {start: 1.171875, factor: 2.0, count: 9}
    tolerances: {phase: 1.0e-12}

Unknown keys anywhere are errors.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .semiclassical import geometric_grid
from .symbols import SymbolCoefficients, SymbolSpecError, symbol_from_terms

DEFAULT_TOLERANCES = {
    "phase": 1e-12,
    "norm_slack": 1e-9,
    "rank_rel": 1e-10,
    "bessel_tail": 1e-6,
    "power_tol": 1e-12,
    "power_max_iter": 100_000,
}
DEFAULT_AVERAGING_TIMES = [float(2**j) for j in range(11)]
DEFAULT_ENERGY_GRID = {"start": 300 / 256, "factor": 2.0, "count": 9}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def _int(value: Any, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name}: must be >= {minimum}, got {value}")
    return value


def _real(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name}: must be finite, got {value!r}")
    return float(value)


def _reals(value: Any, name: str) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError(f"{name}: expected a list of numbers, got {value!r}")
    return [_real(v, f"{name}[{i}]") for i, v in enumerate(value)]


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int
    frequency_radius: int
    momentum_radius: int
    regularity: float
    symbol: list
    times: list = field(default_factory=lambda: [0.3, -0.3, math.pi, -math.pi, 2.7])
    averaging_times: list = field(default_factory=lambda: list(DEFAULT_AVERAGING_TIMES))
    energy_grid: dict = field(default_factory=lambda: dict(DEFAULT_ENERGY_GRID))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise ConfigError(f"config must be a mapping, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        if unknown := set(data) - known:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        required = {"dimension", "frequency_radius", "momentum_radius", "regularity", "symbol"}
        if missing := required - set(data):
            raise ConfigError(f"missing keys: {sorted(missing)}")

        N = _int(data["dimension"], "dimension", 1)
        K = _int(data["frequency_radius"], "frequency_radius")
        P = _int(data["momentum_radius"], "momentum_radius")
        r = _real(data["regularity"], "regularity")
        if not r > N:
            raise ConfigError(f"regularity: r must exceed the dimension {N}, got {r}")

        kw: dict[str, Any] = {}
        if "times" in data:
            kw["times"] = _reals(data["times"], "times")
        if "averaging_times" in data:
            Ts = _reals(data["averaging_times"], "averaging_times")
            if not Ts:
                raise ConfigError("averaging_times: must not be empty")
            if any(T <= 0 for T in Ts):
                raise ConfigError("averaging_times: every T must be positive")
            kw["averaging_times"] = Ts
        if "energy_grid" in data:
            grid = data["energy_grid"]
            if not isinstance(grid, Mapping) or set(grid) != {"start", "factor", "count"}:
                raise ConfigError("energy_grid: needs exactly start, factor, count")
            eg = {
                "start": _real(grid["start"], "energy_grid.start"),
                "factor": _real(grid["factor"], "energy_grid.factor"),
                "count": _int(grid["count"], "energy_grid.count", 1),
            }
            if eg["start"] <= 0 or eg["factor"] <= 1:
                raise ConfigError("energy_grid: start must be > 0 and factor > 1")
            kw["energy_grid"] = eg
        tol = dict(DEFAULT_TOLERANCES)
        if "tolerances" in data:
            given = data["tolerances"]
            if not isinstance(given, Mapping):
                raise ConfigError("tolerances: expected a mapping")
            if unknown := set(given) - set(DEFAULT_TOLERANCES):
                raise ConfigError(f"tolerances: unknown keys {sorted(unknown)}")
            for key, value in given.items():
                if key == "power_max_iter":
                    tol[key] = _int(value, f"tolerances.{key}", 1)
                else:
                    tol[key] = _real(value, f"tolerances.{key}")
                    if tol[key] <= 0:
                        raise ConfigError(f"tolerances.{key}: must be positive")
        kw["tolerances"] = tol
        if data.get("output") is not None:
            if not isinstance(data["output"], str):
                raise ConfigError("output: expected a path string")
            kw["output"] = data["output"]

        cfg = cls(N, K, P, r, data["symbol"], **kw)
        cfg.coefficients()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        if out["output"] is None:
            del out["output"]
        return json.loads(json.dumps(out))

    def coefficients(self) -> SymbolCoefficients:
        try:
            return symbol_from_terms(self.symbol, self.dimension, self.frequency_radius, self.momentum_radius)
        except SymbolSpecError as exc:
            raise ConfigError(f"symbol: {exc}") from None

    def energies(self) -> list[float]:
        g = self.energy_grid
        return geometric_grid(g["start"], g["factor"], g["count"])

    def digest(self, *keys: str) -> str:
        """sha256 over the canonical JSON of selected fields (all but output by default)."""
        data = self.to_dict()
        data.pop("output", None)
        if keys:
            data = {k: data[k] for k in keys}
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_output(self, output: str | None) -> "ExperimentConfig":
        return replace(self, output=output)


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return ExperimentConfig.from_dict(data)


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
