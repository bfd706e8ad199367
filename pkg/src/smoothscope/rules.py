"""Named rules that pick a kernel lengthscale or stencil radius from local context."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox, PointSet, bounding_box, fill_distance

__all__ = [
    "LENGTHSCALE_RULES",
    "RADIUS_RULES",
    "LocalContext",
    "Rule",
    "RuleError",
    "global_fill_distance",
    "lengthscale_from_rule",
    "parse_rule",
    "stencil_radius_from_rule",
]

LENGTHSCALE_RULES = ("stencil_radius_x2", "neighbor_diam_x2", "fill_times_diam", "fixed")
RADIUS_RULES = ("fill_distance", "fill_times", "fixed")

_RULE_RE = re.compile(r"^\s*([a-z_0-9]+)\s*(?:\(\s*([^()]*?)\s*\))?\s*$")


class RuleError(ValueError):
    """Unknown rule, malformed argument, or nonpositive result."""


@dataclass(frozen=True)
class Rule:
    """A rule name with an optional numeric argument, e.g. ``fixed(0.04)``."""

    name: str
    value: float | None = None

    def __str__(self) -> str:
        return self.name if self.value is None else f"{self.name}({self.value!r})"


def parse_rule(text: str, allowed: tuple[str, ...]) -> Rule:
    m = _RULE_RE.match(text)
    if not m or m.group(1) not in allowed:
        raise RuleError(f"unknown rule {text!r}; expected one of {', '.join(allowed)}")
    name, arg = m.group(1), m.group(2)
    needs_arg = name in ("fixed", "fill_times")
    if needs_arg != (arg is not None):
        raise RuleError(f"rule {name!r} {'needs' if needs_arg else 'takes no'} argument")
    value = None
    if arg is not None:
        try:
            value = float(arg)
        except ValueError:
            raise RuleError(f"bad numeric argument in {text!r}") from None
        if not (np.isfinite(value) and value > 0):
            raise RuleError(f"argument of {name!r} must be positive")
    return Rule(name, value)


@dataclass(frozen=True)
class LocalContext:
    """What a rule may look at for one center."""

    stencil_radius: float | None = None
    neighbor_box: BoundingBox | None = None
    global_fill: float | None = None


def _positive(value: float | None, rule: Rule) -> float:
    if value is None:
        raise RuleError(f"rule {rule} lacks the context it needs")
    if not (np.isfinite(value) and value > 0):
        raise RuleError(f"rule {rule} gives nonpositive value {value}")
    return float(value)


def lengthscale_from_rule(rule: Rule, ctx: LocalContext) -> float:
    """Kernel lengthscale for one center.

    ``stencil_radius_x2`` doubles the initial stencil radius,
    ``neighbor_diam_x2`` doubles the diameter of the neighbours' bounding
    box, ``fill_times_diam`` multiplies the global fill distance by that
    diameter, ``fixed(v)`` returns ``v``.
    """
    if rule.name == "fixed":
        return _positive(rule.value, rule)
    if rule.name == "stencil_radius_x2":
        return _positive(None if ctx.stencil_radius is None else 2.0 * ctx.stencil_radius, rule)
    if rule.name == "neighbor_diam_x2":
        return _positive(None if ctx.neighbor_box is None else 2.0 * ctx.neighbor_box.diameter, rule)
    if rule.name == "fill_times_diam":
        if ctx.global_fill is None or ctx.neighbor_box is None:
            raise RuleError(f"rule {rule} lacks the context it needs")
        return _positive(ctx.global_fill * ctx.neighbor_box.diameter, rule)
    raise RuleError(f"unknown lengthscale rule {rule}")


def stencil_radius_from_rule(rule: Rule, global_fill: float | None) -> float:
    """Stencil half-width: the global fill distance, a multiple of it, or fixed."""
    if rule.name == "fixed":
        return _positive(rule.value, rule)
    if rule.name == "fill_distance":
        return _positive(global_fill, rule)
    if rule.name == "fill_times":
        return _positive(None if global_fill is None else rule.value * global_fill, rule)
    raise RuleError(f"unknown radius rule {rule}")


def global_fill_distance(X: PointSet, box: BoundingBox | None = None, *, max_candidates: int = 2_000_000) -> float:
    """Fill distance of ``X`` over ``box`` (default: its bounding box).

    The box is sampled by a regular candidate grid about four times finer per
    axis than the average site spacing, capped at ``max_candidates`` nodes.
    """
    box = box or bounding_box(X)
    d = X.dim
    per_axis = int(np.ceil(4 * len(X) ** (1.0 / d))) + 1
    per_axis = max(2, min(per_axis, int(max_candidates ** (1.0 / d))))
    axes = [
        np.linspace(lo, hi, per_axis) if hi > lo else np.array([lo])
        for lo, hi in zip(box.lower, box.upper)
    ]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return fill_distance(X, PointSet(grid, check=False))
