"""Local smoothness estimation from nested kernel interpolants.

For a hierarchy ``X_1 ⊂ ... ⊂ X_M`` around a center, interpolate the data on
every level and record, for each consecutive pair ``(m-1, m)``:

* ``c2``: mean squared difference of the two interpolants over ``X_M``;
* ``cN``: squared native norm of the coarser interpolant, ``f^T K^-1 f``;
* ``dN``: squared native norm of the difference of the two interpolants.

Log-log regressions against the coarser level's fill-distance proxy give
``c2 ~ h^(2 b)`` with ``beta_l2 = b`` and ``cN, dN ~ h^(2 g)`` with
``beta_native = tau + g``.  For a function of local Sobolev order
``beta < tau``, ``b`` tends to ``beta`` and ``g`` to ``beta - tau``.

Which native sequence defines ``beta_native`` is configurable.  The default
(``increment``) uses ``dN``: the norm of the interpolant itself contains a
constant part from the smooth background that masks the growth over the
few levels a local hierarchy offers, while ``dN`` isolates the growth.
Both native estimates are always reported.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import BoundingBox, PointSet, bounding_box, knn_chebyshev
from .hierarchy import Hierarchy, HierarchyError, fixed_stencils, uniform_subsample
from .interpolation import ConditioningError, evaluate, interpolate, native_norm_sq_of_difference
from .kernels import KernelSpec
from .rules import LocalContext, Rule, global_fill_distance, lengthscale_from_rule, stencil_radius_from_rule

__all__ = [
    "NATIVE_TRACKS",
    "EstimationError",
    "SalsaOptions",
    "SlopeFit",
    "SmoothnessReport",
    "StencilPolicy",
    "SubsamplePolicy",
    "analyze_field",
    "fit_loglog",
    "run_salsa",
]

logger = logging.getLogger(__name__)

NATIVE_TRACKS = ("increment", "interpolant")


class EstimationError(RuntimeError):
    """No usable regression could be formed."""


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares line ``log c = intercept + slope * log h``."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int
    dropped_levels: tuple[int, ...] = ()


def fit_loglog(h, c, dropped_levels=()) -> SlopeFit:
    """Ordinary least squares of ``log c`` against ``log h``."""
    h = np.asarray(h, dtype=float)
    c = np.asarray(c, dtype=float)
    if h.shape != c.shape or h.ndim != 1:
        raise ValueError("h and c must be vectors of equal length")
    if len(h) < 2:
        raise ValueError("need at least two points")
    if np.any(h <= 0) or np.any(c <= 0) or not (np.all(np.isfinite(h)) and np.all(np.isfinite(c))):
        raise ValueError("h and c must be positive and finite")
    x, y = np.log(h), np.log(c)
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx == 0:
        raise ValueError("h values must not all coincide")
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = dy - slope * dx
    syy = float(dy @ dy)
    ss_res = float(resid @ resid)
    r2 = 1.0 if syy == 0 else max(0.0, 1.0 - ss_res / syy)
    return SlopeFit(slope, float(intercept), r2, len(h), tuple(int(i) for i in dropped_levels))


@dataclass(frozen=True)
class SalsaOptions:
    """Knobs of the estimator.

    ``drop_first`` pairs at the coarse end are excluded from every fit
    (``True`` means one).  Values below ``floor * eps^2`` times the squared
    data scale count as exact zeros.  Pairs touching a jittered level are
    excluded unless ``drop_flagged`` is off.
    """

    drop_first: int = 0
    floor: float = 1e2
    native_track: str = "increment"
    drop_flagged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "drop_first", int(self.drop_first))
        if self.drop_first < 0:
            raise ValueError("drop_first must be nonnegative")
        if not self.floor >= 0:
            raise ValueError("floor must be nonnegative")
        if self.native_track not in NATIVE_TRACKS:
            raise ValueError(f"native_track must be one of {NATIVE_TRACKS}")


@dataclass(frozen=True)
class SmoothnessReport:
    """Per-center sequences, fits and estimates.

    Sequences are indexed by pair: entry ``i`` belongs to levels ``(i+1, i+2)``
    and is plotted at ``h_values[i]`` (the coarser level's proxy).  Failed
    fits are ``None`` and the matching beta is NaN.
    """

    center: np.ndarray
    tau: float
    lengthscale: float
    native_track: str
    h_values: np.ndarray
    c2_sequence: np.ndarray
    cN_sequence: np.ndarray
    dN_sequence: np.ndarray
    conditioning_flags: np.ndarray
    fit_l2: SlopeFit | None
    fit_native_interpolant: SlopeFit | None
    fit_native_increment: SlopeFit | None
    level_sizes: tuple[int, ...] = ()
    error: str | None = None

    @property
    def fit_native(self) -> SlopeFit | None:
        return self.fit_native_increment if self.native_track == "increment" else self.fit_native_interpolant

    @property
    def beta_l2(self) -> float:
        return np.nan if self.fit_l2 is None else self.fit_l2.slope / 2

    def _native_beta(self, fit: SlopeFit | None) -> float:
        return np.nan if fit is None else self.tau + fit.slope / 2

    @property
    def beta_native(self) -> float:
        return self._native_beta(self.fit_native)

    @property
    def beta_native_interpolant(self) -> float:
        return self._native_beta(self.fit_native_interpolant)

    @property
    def beta_native_increment(self) -> float:
        return self._native_beta(self.fit_native_increment)

    @property
    def status(self) -> str:
        ok = self.error is None and np.isfinite(self.beta_l2) and np.isfinite(self.beta_native)
        return "ok" if ok else "degenerate"

    @classmethod
    def failed(cls, center, tau: float, native_track: str, message: str) -> "SmoothnessReport":
        empty = np.empty(0)
        return cls(
            np.asarray(center, dtype=float), tau, np.nan, native_track, empty, empty, empty, empty,
            np.empty(0, dtype=bool), None, None, None, (), message,
        )


def _fit_track(h, c, usable) -> SlopeFit | None:
    if int(usable.sum()) < 2:
        return None
    return fit_loglog(h[usable], c[usable], np.flatnonzero(~usable))


def run_salsa(
    spec: KernelSpec,
    H: Hierarchy,
    f_values,
    options: SalsaOptions | None = None,
    center=None,
) -> SmoothnessReport:
    """Estimate the local smoothness of ``f_values`` (given on ``H.master``).

    Raises :class:`EstimationError` when every level needed jitter or when
    no track has two usable pairs.
    """
    opts = options or SalsaOptions()
    f = np.asarray(f_values, dtype=float).reshape(-1)
    if len(f) != len(H.master):
        raise ValueError(f"{len(f)} values for {len(H.master)} master points")
    M = H.n_levels
    if M < 3:
        raise EstimationError("need at least three levels")

    # Work on data scaled to unit max-norm; slopes are unaffected and the
    # floor becomes a fixed threshold.
    scale = float(np.max(np.abs(f)))
    g = f / scale if scale > 0 else f
    finest = H.level_points(M)

    interps = []
    flags = np.zeros(M, dtype=bool)
    for m in range(1, M + 1):
        idx = H.levels[m - 1]
        try:
            I = interpolate(spec, H.master.subset(idx), g[idx])
        except ConditioningError as exc:
            exc.level = m
            raise
        interps.append(I)
        flags[m - 1] = I.jitter_used > 0
    if np.all(flags):
        raise EstimationError("every level needed a diagonal shift")

    on_finest = [evaluate(I, finest) for I in interps]
    c2 = np.array([np.mean((on_finest[m] - on_finest[m - 1]) ** 2) for m in range(1, M)])
    cN = np.array([interps[m - 1].native_sq for m in range(1, M)])
    dN = np.array([native_norm_sq_of_difference(interps[m], interps[m - 1]) for m in range(1, M)])
    h = np.asarray(H.h_proxy[: M - 1], dtype=float)

    eps = np.finfo(float).eps
    floor = opts.floor * eps**2
    window = np.arange(M - 1) >= opts.drop_first
    pair_clean = ~(flags[:-1] | flags[1:]) if opts.drop_flagged else np.ones(M - 1, dtype=bool)
    coarse_clean = ~flags[:-1] if opts.drop_flagged else np.ones(M - 1, dtype=bool)

    fit_l2 = _fit_track(h, c2, window & pair_clean & (c2 > floor))
    fit_interp = _fit_track(h, cN, window & coarse_clean & (cN > floor))
    fit_incr = _fit_track(h, dN, window & pair_clean & (dN > floor))
    if fit_l2 is None and fit_interp is None and fit_incr is None:
        raise EstimationError("fewer than two usable pairs on every track")

    s2 = scale**2 if scale > 0 else 1.0
    return SmoothnessReport(
        center=np.asarray(center if center is not None else finest.coords.mean(axis=0), dtype=float),
        tau=float(spec.tau),
        lengthscale=float(spec.lengthscale),
        native_track=opts.native_track,
        h_values=h,
        c2_sequence=c2 * s2,
        cN_sequence=cN * s2,
        dN_sequence=dN * s2,
        conditioning_flags=flags,
        fit_l2=fit_l2,
        fit_native_interpolant=fit_interp,
        fit_native_increment=fit_incr,
        level_sizes=tuple(H.sizes()),
    )


@dataclass(frozen=True)
class StencilPolicy:
    """Fixed stencils around each center, sampling a closed-form ``function``.

    ``function`` maps an ``(n, d)`` array to ``n`` values.  The radius is
    either given by ``radius_rule`` (resolved against the global fill
    distance of the data sites) or fixed.
    """

    function: Callable[[np.ndarray], np.ndarray]
    levels: int
    radius_rule: Rule
    lengthscale_rule: Rule | None = None
    domain: BoundingBox | None = None


@dataclass(frozen=True)
class SubsamplePolicy:
    """Uniform subsampling of the ``neighbors`` nearest data sites."""

    neighbors: int
    levels: int
    lengthscale_rule: Rule | None = None
    measured_h: bool = False


@dataclass
class _Job:
    spec: KernelSpec
    data: PointSet
    values: np.ndarray
    policy: StencilPolicy | SubsamplePolicy
    options: SalsaOptions
    global_fill: float | None
    radius: float | None = None


_JOB: _Job | None = None


def _init_worker(job: _Job) -> None:
    global _JOB
    _JOB = job


def _analyze_one(center: np.ndarray) -> SmoothnessReport:
    job = _JOB
    assert job is not None
    spec, policy = job.spec, job.policy
    try:
        if isinstance(policy, StencilPolicy):
            H = fixed_stencils(center, job.radius, spec.dim, policy.levels, policy.domain)
            f = np.asarray(policy.function(H.master.coords), dtype=float)
            ctx = LocalContext(stencil_radius=job.radius, neighbor_box=bounding_box(H.master), global_fill=job.global_fill)
        else:
            idx = knn_chebyshev(job.data, center, policy.neighbors)
            neighbors = job.data.subset(idx)
            H = uniform_subsample(neighbors, policy.levels, measured_h=policy.measured_h)
            f = job.values[idx]
            ctx = LocalContext(neighbor_box=bounding_box(neighbors), global_fill=job.global_fill)
        if policy.lengthscale_rule is not None:
            spec = spec.with_lengthscale(lengthscale_from_rule(policy.lengthscale_rule, ctx))
        return run_salsa(spec, H, f, job.options, center=center)
    except (EstimationError, ConditioningError, HierarchyError) as exc:
        return SmoothnessReport.failed(center, spec.tau, job.options.native_track, str(exc))


def _needs_global_fill(policy) -> bool:
    rules = [policy.lengthscale_rule]
    if isinstance(policy, StencilPolicy):
        rules.append(policy.radius_rule)
    return any(r is not None and r.name in ("fill_times_diam", "fill_distance", "fill_times") for r in rules)


def analyze_field(
    spec: KernelSpec,
    data: PointSet,
    values,
    centers: PointSet,
    policy: StencilPolicy | SubsamplePolicy,
    options: SalsaOptions | None = None,
    *,
    workers: int | None = 1,
) -> list[SmoothnessReport]:
    """Run the estimator at every center; failures become degenerate reports.

    ``spec.lengthscale`` is used unless the policy names a lengthscale rule.
    With ``workers > 1`` centers are spread over a process pool; results
    come back in center order, so output does not depend on ``workers``.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) != len(data):
        raise ValueError(f"{len(values)} values for {len(data)} sites")
    if centers.dim != data.dim or data.dim != spec.dim:
        raise ValueError("dimension mismatch between kernel, data and centers")
    if isinstance(policy, SubsamplePolicy) and policy.neighbors > len(data):
        raise ValueError(f"k={policy.neighbors} exceeds the {len(data)} data sites")
    options = options or SalsaOptions()
    gfill = global_fill_distance(data) if _needs_global_fill(policy) else None
    radius = None
    if isinstance(policy, StencilPolicy):
        radius = stencil_radius_from_rule(policy.radius_rule, gfill)
    job = _Job(spec, data, values, policy, options, gfill, radius)

    workers = (os.cpu_count() or 1) if workers is None else max(1, int(workers))
    coords = [np.array(c) for c in centers.coords]
    if workers == 1 or len(coords) < 2 * workers:
        _init_worker(job)
        return [_analyze_one(c) for c in coords]
    chunk = max(1, len(coords) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(job,)) as pool:
        return list(pool.map(_analyze_one, coords, chunksize=chunk))
