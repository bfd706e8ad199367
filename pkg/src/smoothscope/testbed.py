"""Closed-form test functions with annotated singularities, plus samplers.

Every function takes an ``(n, d)`` array (a 1-D array is read as ``n``
points in 1-D) and returns ``n`` values.  Each :class:`TestFunction` lists
its singular features with the local Sobolev order expected there, so a
smoothness map can be checked against known answers.

``composite_2d`` is a synthetic field on ``[0, 6]^2`` that combines seven
component kinds: a global sine modulation, a ramp confined to a rectangle,
a ridge along a sine-shaped path, a truncated cone, an exponential peak, a
damped oscillation and a constant block.  Its parameters are fixed here and
its annotations are derived from its own formulas.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .geometry import BoundingBox, PointSet

__all__ = [
    "BUNNY_CENTER",
    "FUNCTIONS",
    "Annotation",
    "TestFunction",
    "abs_1d",
    "bunny_3d",
    "composite_2d",
    "get_function",
    "grid_points",
    "halton",
    "halton_points",
    "piecewise_1d",
    "sine_1d",
    "step_1d",
]


def _points(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if dim == 1 and arr.ndim <= 1:
        return arr.reshape(-1, 1)
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise ValueError(f"expected {dim}-D points, got shape {arr.shape}")
    return arr


def _out(vals: np.ndarray, x):
    return float(vals[0]) if np.ndim(x) == 0 else vals


# ---------------------------------------------------------------- 1-D


def piecewise_1d(x):
    """Piecewise function on [-1, 1] with jumps at -0.4, 0.55 and kinks in between."""
    t = _points(x, 1)[:, 0]
    out = np.empty_like(t)
    conds = [
        t < -0.4,
        (t >= -0.4) & (t < -0.35),
        (t >= -0.35) & (t < -0.15),
        (t >= -0.15) & (t < -0.05),
        (t >= -0.05) & (t < 0.55),
        t >= 0.55,
    ]
    branches = [
        lambda s: np.full_like(s, 6.0),
        lambda s: 0.1 * np.abs(-20 * s - 9) + 6,
        lambda s: 0.1 * np.abs(-20 * s - 5) + 6,
        lambda s: 0.1 * np.abs(-20 * s - 1) + 6,
        lambda s: 6 + np.sin(20 * np.pi * s),
        lambda s: 0.2 * np.sin(6 * np.pi * s),
    ]
    for cond, fn in zip(conds, branches):
        out[cond] = fn(t[cond])
    return _out(out, x)


def abs_1d(x):
    """``|x|``: locally of Sobolev order 3/2 at the origin."""
    return _out(np.abs(_points(x, 1)[:, 0]), x)


def step_1d(x):
    """Unit step at the origin (order 1/2)."""
    return _out(np.where(_points(x, 1)[:, 0] >= 0, 1.0, 0.0), x)


def sine_1d(x):
    """``sin(pi x)``: analytic."""
    return _out(np.sin(np.pi * _points(x, 1)[:, 0]), x)


# ---------------------------------------------------------------- 2-D

_RAMP_BOX = ((0.5, 2.5), (0.5, 2.0))
_BLOCK_BOX = ((3.5, 5.5), (0.3, 1.1))
_CONE_CENTER = (1.5, 4.5)
_CONE_RADIUS = 0.8
_CONE_CAP = 0.6  # truncation height, reached at r = 0.4 * radius
_PEAK_CENTER = (4.5, 2.0)
_PEAK_WIDTH = 0.5
_OSC_CENTER = (4.5, 4.6)
_RIDGE_WIDTH = 0.4


def _ridge_path(x):
    return 3.0 + 0.25 * np.sin(2.0 * x)


def composite_2d(x):
    """Synthetic 2-D field on [0, 6]^2 with jumps, kinks and a point singularity."""
    p = _points(x, 2)
    X, Y = p[:, 0], p[:, 1]
    out = 0.25 * np.sin(4 * np.pi * X / 6) * np.sin(4 * np.pi * Y / 6)

    (rx0, rx1), (ry0, ry1) = _RAMP_BOX
    in_ramp = (X >= rx0) & (X < rx1) & (Y >= ry0) & (Y < ry1)
    out += np.where(in_ramp, X - rx0, 0.0)

    out += np.maximum(0.0, 1.0 - np.abs(Y - _ridge_path(X)) / _RIDGE_WIDTH)

    r_cone = np.hypot(X - _CONE_CENTER[0], Y - _CONE_CENTER[1])
    out += np.minimum(np.maximum(0.0, 1.0 - r_cone / _CONE_RADIUS), _CONE_CAP)

    r_peak = np.hypot(X - _PEAK_CENTER[0], Y - _PEAK_CENTER[1])
    out += np.exp(-r_peak / _PEAK_WIDTH)

    r_osc = np.hypot(X - _OSC_CENTER[0], Y - _OSC_CENTER[1])
    out += 0.3 * np.exp(-2.0 * r_osc**2) * np.cos(6.0 * r_osc)

    (bx0, bx1), (by0, by1) = _BLOCK_BOX
    out += np.where((X >= bx0) & (X < bx1) & (Y >= by0) & (Y < by1), 1.0, 0.0)
    return out


# ---------------------------------------------------------------- 3-D

#: Default location of the point singularity of :func:`bunny_3d`.
BUNNY_CENTER = (0.2, 0.1, 0.7)


def bunny_3d(x, c=BUNNY_CENTER):
    """``4 (z - c_z) / |x - c|`` above the surface ``z = sin(5x + 2y) / 2``, else 1.

    Raises ``ValueError`` when asked for the value at ``c`` itself.
    """
    p = _points(x, 3)
    c = np.asarray(c, dtype=float)
    diff = p - c
    r = np.sqrt(np.sum(diff**2, axis=1))
    above = p[:, 2] > 0.5 * np.sin(5 * p[:, 0] + 2 * p[:, 1])
    if np.any(above & (r == 0)):
        raise ValueError("bunny_3d is undefined at its center point")
    out = np.ones(len(p))
    out[above] = 4.0 * diff[above, 2] / r[above]
    return out


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class Annotation:
    """A singular (or smooth) feature and the local order expected on it.

    ``locations`` is an ``(p, d)`` array of sample points on the feature.
    """

    label: str
    kind: str
    beta: float
    locations: np.ndarray


@dataclass(frozen=True)
class TestFunction:
    name: str
    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    domain: BoundingBox
    annotations: tuple[Annotation, ...] = field(default=())

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(_points(x, self.dim)), dtype=float).reshape(-1)

    def annotated(self, kind: str) -> list[Annotation]:
        return [a for a in self.annotations if a.kind == kind]


def _pts(*rows) -> np.ndarray:
    return np.array(rows, dtype=float).reshape(len(rows), -1)


def _composite_annotations() -> tuple[Annotation, ...]:
    t = np.linspace(0.15, 0.85, 5)
    (rx0, rx1), (ry0, ry1) = _RAMP_BOX
    (bx0, bx1), (by0, by1) = _BLOCK_BOX
    ang = np.linspace(0, 2 * np.pi, 6, endpoint=False) + 0.3
    cx, cy = _CONE_CENTER
    cap_r = (1 - _CONE_CAP) * _CONE_RADIUS
    ridge_x = np.linspace(3.2, 5.6, 5)
    return (
        Annotation("ramp right edge", "jump", 0.5, np.column_stack([np.full(5, rx1), ry0 + t * (ry1 - ry0)])),
        Annotation("ramp left edge", "corner", 1.5, np.column_stack([np.full(5, rx0), ry0 + t * (ry1 - ry0)])),
        Annotation("block boundary", "jump", 0.5, np.column_stack([bx0 + t * (bx1 - bx0), np.full(5, by1)])),
        Annotation("cone rim", "corner", 1.5, np.column_stack([cx + _CONE_RADIUS * np.cos(ang), cy + _CONE_RADIUS * np.sin(ang)])),
        Annotation("cone plateau edge", "corner", 1.5, np.column_stack([cx + cap_r * np.cos(ang), cy + cap_r * np.sin(ang)])),
        Annotation("ridge crest", "corner", 1.5, np.column_stack([ridge_x, _ridge_path(ridge_x)])),
        Annotation("exponential peak", "point-singularity", 2.0, _pts(_PEAK_CENTER)),
        Annotation("smooth background", "smooth", np.inf, _pts((3.0, 5.5), (5.5, 5.5), (3.1, 1.6), (0.3, 5.7), (2.9, 0.2))),
    )


def _bunny_annotations() -> tuple[Annotation, ...]:
    xy = np.array([(-0.6, -0.5), (-0.3, 0.6), (0.5, -0.6), (0.7, 0.4), (-0.7, 0.1)])
    surface = np.column_stack([xy, 0.5 * np.sin(5 * xy[:, 0] + 2 * xy[:, 1])])
    return (
        Annotation("sine surface", "jump", 0.5, surface),
        Annotation("center point", "point-singularity", 1.5, _pts(BUNNY_CENTER)),
        Annotation("lower region", "smooth", np.inf, _pts((0.0, -0.6, -0.8), (-0.5, 0.5, -0.85), (0.6, 0.6, -0.9))),
    )


def _box(lo, hi) -> BoundingBox:
    return BoundingBox(np.array(lo, dtype=float), np.array(hi, dtype=float))


FUNCTIONS: dict[str, TestFunction] = {
    "piecewise_1d": TestFunction(
        "piecewise_1d", 1, piecewise_1d, _box([-1.0], [1.0]),
        (
            Annotation("jump at -0.4", "jump", 0.5, _pts(-0.4)),
            Annotation("jump at 0.55", "jump", 0.5, _pts(0.55)),
            Annotation("corner at -0.35", "corner", 1.5, _pts(-0.35)),
            Annotation("corner at -0.25", "corner", 1.5, _pts(-0.25)),
            Annotation("corner at -0.15", "corner", 1.5, _pts(-0.15)),
            Annotation("corner at -0.05", "corner", 1.5, _pts(-0.05)),
            Annotation("sine region", "smooth", np.inf, _pts(0.1, 0.2, 0.3, 0.4)),
        ),
    ),
    "abs_1d": TestFunction("abs_1d", 1, abs_1d, _box([-1.0], [1.0]), (Annotation("kink", "corner", 1.5, _pts(0.0)),)),
    "step_1d": TestFunction("step_1d", 1, step_1d, _box([-1.0], [1.0]), (Annotation("jump", "jump", 0.5, _pts(0.0)),)),
    "sine_1d": TestFunction("sine_1d", 1, sine_1d, _box([-1.0], [1.0])),
    "composite_2d": TestFunction("composite_2d", 2, composite_2d, _box([0.0, 0.0], [6.0, 6.0]), _composite_annotations()),
    "bunny_3d": TestFunction("bunny_3d", 3, bunny_3d, _box([-1.0] * 3, [1.0] * 3), _bunny_annotations()),
}


def get_function(name: str) -> TestFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; choose from {', '.join(sorted(FUNCTIONS))}") from None


def halton(n: int, dim: int) -> PointSet:
    """First ``n`` Halton points in ``(0, 1)^dim`` (prime bases, index from 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 1 <= dim <= 6:
        raise ValueError("dim must be between 1 and 6")
    pts = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    return PointSet(pts, check=False)


def halton_points(n: int, domain: BoundingBox) -> PointSet:
    """Halton points mapped affinely onto ``domain``."""
    u = halton(n, domain.dim).coords
    return PointSet(domain.lower + u * domain.extent, check=False)


def grid_points(n: int, domain: BoundingBox) -> PointSet:
    """Tensor grid with ``n`` nodes per axis spanning ``domain`` (endpoints included)."""
    if n < 2:
        raise ValueError("a grid needs at least two nodes per axis")
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(domain.lower, domain.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(np.column_stack([m.ravel() for m in mesh]), check=False)
