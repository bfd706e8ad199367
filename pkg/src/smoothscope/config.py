"""Run configuration: a flat ``key = value`` text file.

Blank lines and lines starting with ``#`` are ignored.  Every key must be
known; values are validated as they are read, and errors name the key.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .rules import LENGTHSCALE_RULES, RADIUS_RULES, Rule, RuleError, parse_rule
from .salsa import NATIVE_TRACKS

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a run.  Field names double as config-file keys."""

    mode: str = "analyze"
    tau: float | None = None
    lengthscale_rule: Rule = Rule("stencil_radius_x2")
    method: str = "subsample"
    levels: int = 8
    neighbors: int = 200
    stencil_radius_rule: Rule = Rule("fill_distance")
    function: str | None = None
    drop_first: int = 0
    floor: float = 1e2
    native_track: str = "increment"
    drop_flagged: bool = True
    measured_h: bool = False
    bessel: bool = False
    centers: str = "all"
    raw_dump: bool = False
    workers: int = 0
    input: str | None = None
    output: str | None = None
    grid_min: int = 4
    grid_max: int = 10

    @property
    def worker_count(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def validate(self, dim: int | None = None) -> "RunConfig":
        """Cross-field checks; ``dim`` enables the ``tau > d/2`` test."""
        if self.mode not in ("analyze", "rates", "synth"):
            raise ConfigError(f"mode: unknown mode {self.mode!r}")
        if self.method not in ("stencil", "subsample"):
            raise ConfigError(f"method: expected stencil or subsample, got {self.method!r}")
        if self.levels < 3:
            raise ConfigError("levels: at least 3 levels are required")
        if self.method == "subsample" and self.neighbors < self.levels:
            raise ConfigError(f"neighbors: {self.neighbors} neighbours cannot fill {self.levels} levels")
        if self.method == "stencil" and self.mode == "analyze" and not self.function:
            raise ConfigError("function: the stencil method needs a built-in test function")
        if self.native_track not in NATIVE_TRACKS:
            raise ConfigError(f"native_track: expected one of {', '.join(NATIVE_TRACKS)}")
        if self.tau is not None and dim is not None and not self.tau > dim / 2:
            raise ConfigError(f"tau: {self.tau} must exceed d/2 = {dim / 2}")
        if self.mode == "analyze" and self.tau is None:
            raise ConfigError("tau: required for analyze")
        if not 1 <= self.grid_min < self.grid_max:
            raise ConfigError("grid_min, grid_max: need 1 <= grid_min < grid_max")
        c = self.centers
        if not (c == "all" or c.startswith("file:") or c.startswith("grid:")):
            raise ConfigError(f"centers: expected all, file:PATH or grid:N, got {c!r}")
        if c.startswith("grid:"):
            try:
                n = int(c[5:])
            except ValueError:
                raise ConfigError(f"centers: bad grid size in {c!r}") from None
            if n < 1:
                raise ConfigError("centers: grid size must be positive")
        return self


def _bool(key: str, text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _int(key: str, text: str, minimum: int = 0) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if v < minimum:
        raise ConfigError(f"{key}: must be at least {minimum}")
    return v


def _float(key: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite")
    return v


def _convert(key: str, text: str):
    if key in ("tau", "floor"):
        v = _float(key, text)
        if key == "floor" and v < 0:
            raise ConfigError("floor: must be nonnegative")
        return v
    if key in ("levels", "neighbors", "workers", "grid_min", "grid_max"):
        return _int(key, text)
    if key == "drop_first":
        low = text.strip().lower()
        if low in ("true", "false", "yes", "no", "on", "off"):
            return int(_bool(key, text))
        return _int(key, text)
    if key in ("drop_flagged", "measured_h", "bessel", "raw_dump"):
        return _bool(key, text)
    try:
        if key == "lengthscale_rule":
            return parse_rule(text, LENGTHSCALE_RULES)
        if key == "stencil_radius_rule":
            return parse_rule(text, RADIUS_RULES)
    except RuleError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return text.strip()


_KEYS = {f.name for f in fields(RunConfig)}


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text on top of ``base`` (default values otherwise)."""
    updates: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{key}: unknown key (line {lineno})")
        if key in updates:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        updates[key] = _convert(key, value)
    return replace(base or RunConfig(), **updates)


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    return parse_config(text, base)
