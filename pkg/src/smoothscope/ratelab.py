"""Empirical convergence-rate harness on functions of known smoothness.

A :class:`RateExperiment` interpolates a closed-form target on a sequence of
nested global grids and measures

* discrete ``L_q`` errors on a validation grid much finer than the finest
  level, whose log-log slope should approach ``beta`` for ``q <= 2`` and
  ``beta - d/2`` for ``q = inf``;
* native norms of the interpolants, whose slope should approach
  ``beta - tau`` when the target lies outside the native space (and stay
  flat when it lies inside).

:func:`inverse_consistency_check` closes the loop by running the local
estimator on the same data and comparing its answer with the measured rate.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import BoundingBox, PointSet
from .hierarchy import Hierarchy
from .interpolation import Interpolant, evaluate, interpolate
from .kernels import KernelSpec, matern_phi
from .salsa import SalsaOptions, SlopeFit, fit_loglog, run_salsa
from .testbed import abs_1d, sine_1d, step_1d

__all__ = [
    "EXPERIMENTS",
    "InverseCheck",
    "RateError",
    "RateExperiment",
    "RateResult",
    "build_experiment",
    "dyadic_grid_hierarchy",
    "inverse_consistency_check",
    "measure_error_rates",
    "measure_native_growth",
    "run_experiment",
    "write_rate_table",
]

#: Lengthscale used by the named experiments on [-1, 1].
DEFAULT_LENGTHSCALE = 0.25
#: Minimum r^2 before a fit is considered asymptotic.
R2_ASYMPTOTIC = 0.95


class RateError(ValueError):
    """Invalid experiment setup."""


def dyadic_grid_hierarchy(domain: BoundingBox, k_min: int, k_max: int) -> Hierarchy:
    """Nested tensor grids with ``2^k + 1`` nodes per axis, ``k = k_min .. k_max``.

    ``h_proxy`` is the fill distance of each grid over the box.
    """
    if not 1 <= k_min < k_max:
        raise RateError("need 1 <= k_min < k_max")
    n_fine = 2**k_max + 1
    axes = [np.linspace(lo, hi, n_fine) for lo, hi in zip(domain.lower, domain.upper)]
    idx = np.stack(np.meshgrid(*[np.arange(n_fine)] * domain.dim, indexing="ij"), axis=-1).reshape(-1, domain.dim)
    coords = np.column_stack([axes[k][idx[:, k]] for k in range(domain.dim)])
    master = PointSet(coords, check=False)
    levels, h = [], []
    for k in range(k_min, k_max + 1):
        stride = 2 ** (k_max - k)
        levels.append(np.flatnonzero(np.all(idx % stride == 0, axis=1)))
        h.append(0.5 * float(np.linalg.norm(domain.extent / 2**k)))
    return Hierarchy(master, tuple(levels), np.array(h), "grid")


@dataclass(frozen=True)
class RateExperiment:
    """Target of known smoothness interpolated on nested global levels."""

    spec: KernelSpec
    domain: BoundingBox
    target: Callable[[np.ndarray], np.ndarray]
    known_beta: float
    levels: Hierarchy
    q_norms: tuple[float, ...] = (2.0, math.inf)
    validation_factor: int = 20
    name: str = "experiment"

    def predicted_error_exponent(self, q: float) -> float:
        d = self.domain.dim
        beta = min(self.known_beta, self.spec.tau)
        gap = max(0.0, 0.5 - 1.0 / q) if q != math.inf else 0.5
        return beta - d * gap

    @property
    def predicted_native_exponent(self) -> float:
        return min(self.known_beta - self.spec.tau, 0.0)


@dataclass
class RateResult:
    """Per-level measurements and fitted exponents of one experiment."""

    experiment: RateExperiment
    h: np.ndarray
    errors: dict[float, np.ndarray]
    native_norms: np.ndarray
    jitter_flags: np.ndarray
    error_fits: dict[float, SlopeFit] = field(default_factory=dict)
    native_fit: SlopeFit | None = None

    @property
    def pre_asymptotic(self) -> bool:
        fits = list(self.error_fits.values()) + ([self.native_fit] if self.native_fit else [])
        return any(f.r_squared < R2_ASYMPTOTIC for f in fits)


def _validation_points(e: RateExperiment) -> PointSet:
    n_fine = max(int(round(len(e.levels.levels[-1]) ** (1.0 / e.domain.dim))), 2)
    if e.validation_factor < 1:
        raise RateError("validation grid would be coarser than the finest level")
    n_val = (n_fine - 1) * e.validation_factor + 1
    axes = [np.linspace(lo, hi, n_val) for lo, hi in zip(e.domain.lower, e.domain.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return PointSet(np.column_stack([m.ravel() for m in mesh]), check=False)


def _level_interpolants(e: RateExperiment) -> list[Interpolant]:
    f = np.asarray(e.target(e.levels.master.coords), dtype=float)
    return [interpolate(e.spec, e.levels.master.subset(lv), f[lv]) for lv in e.levels.levels]


def _discrete_norm(v: np.ndarray, q: float) -> float:
    a = np.abs(v)
    if q == math.inf:
        return float(a.max())
    return float(np.mean(a**q) ** (1.0 / q))


def _usable_fit(h, values, flags) -> SlopeFit:
    keep = ~flags & (values > 0)
    if keep.sum() < 2:
        raise RateError("fewer than two usable levels")
    return fit_loglog(h[keep], values[keep], np.flatnonzero(~keep))


def run_experiment(e: RateExperiment) -> RateResult:
    """Interpolate on every level and measure errors and native norms."""
    interps = _level_interpolants(e)
    val = _validation_points(e)
    exact = np.asarray(e.target(val.coords), dtype=float)
    errors = {q: np.empty(len(interps)) for q in e.q_norms}
    for i, I in enumerate(interps):
        diff = evaluate(I, val) - exact
        for q in e.q_norms:
            errors[q][i] = _discrete_norm(diff, q)
    native = np.sqrt([I.native_sq for I in interps])
    flags = np.array([I.jitter_used > 0 for I in interps])
    h = np.asarray(e.levels.h_proxy, dtype=float)
    res = RateResult(e, h, errors, native, flags)
    res.error_fits = {q: _usable_fit(h, errors[q], flags) for q in e.q_norms}
    res.native_fit = _usable_fit(h, native, flags)
    return res


def measure_error_rates(e: RateExperiment) -> dict[float, SlopeFit]:
    """Fitted ``log error`` vs ``log h`` slope for every requested ``q``."""
    return run_experiment(e).error_fits


def measure_native_growth(e: RateExperiment) -> SlopeFit:
    """Fitted slope of ``log ||I f||_native`` vs ``log h``."""
    return run_experiment(e).native_fit


@dataclass(frozen=True)
class InverseCheck:
    beta_from_rates: float
    beta_from_salsa: float
    difference: float
    saturated: bool
    passed: bool
    threshold: float = 0.25


def inverse_consistency_check(e: RateExperiment, threshold: float = 0.25) -> InverseCheck:
    """Compare the measured L2 rate with the local estimator on the same levels.

    Below the kernel smoothness both must agree within ``threshold``; for
    targets at least as smooth as the kernel both must reach
    ``tau - threshold``, since no rate can certify more than ``tau``.
    """
    q = 2.0 if 2.0 in e.q_norms else e.q_norms[0]
    beta_rates = measure_error_rates(e)[q].slope
    f = np.asarray(e.target(e.levels.master.coords), dtype=float)
    report = run_salsa(e.spec, e.levels, f, SalsaOptions())
    beta_salsa = report.beta_l2
    diff = abs(beta_rates - beta_salsa)
    tau = e.spec.tau
    saturated = e.known_beta >= tau
    if saturated:
        passed = beta_rates >= tau - threshold and beta_salsa >= tau - threshold
    else:
        passed = diff < threshold
    return InverseCheck(beta_rates, beta_salsa, diff, saturated, bool(passed), threshold)


def _translate_target(spec: KernelSpec, z: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    def f(x):
        x = np.asarray(x, dtype=float).reshape(len(x), -1)
        return matern_phi(spec, np.abs(x[:, 0] - z))

    return f


#: Named 1-D experiments: target, its Sobolev order (exclusive supremum).
EXPERIMENTS = {
    "abs": (abs_1d, 1.5),
    "step": (step_1d, 0.5),
    "sine": (sine_1d, math.inf),
    "translate": (None, math.inf),
}


def build_experiment(
    name: str,
    *,
    tau: float = 3.0,
    k_min: int = 4,
    k_max: int = 10,
    lengthscale: float = DEFAULT_LENGTHSCALE,
) -> RateExperiment:
    """A named experiment on [-1, 1] with grids of ``2^k + 1`` nodes."""
    if name not in EXPERIMENTS:
        raise RateError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    spec = KernelSpec(tau, 1, lengthscale)
    domain = BoundingBox(np.array([-1.0]), np.array([1.0]))
    target, beta = EXPERIMENTS[name]
    if target is None:
        target = _translate_target(spec)
    return RateExperiment(spec, domain, target, beta, dyadic_grid_hierarchy(domain, k_min, k_max), name=name)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _qname(q: float) -> str:
    return "inf" if q == math.inf else format(q, "g")


def write_rate_table(result: RateResult, path) -> Path:
    """CSV with one row per level and a commented footer of fitted vs predicted exponents."""
    path = Path(path)
    e = result.experiment
    qs = list(e.q_norms)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "n_points", "h"] + [f"err_L{_qname(q)}" for q in qs] + ["native_norm", "jitter"])
        for i, lv in enumerate(e.levels.levels):
            w.writerow(
                [i + 1, len(lv), _fmt(result.h[i])]
                + [_fmt(result.errors[q][i]) for q in qs]
                + [_fmt(result.native_norms[i]), int(result.jitter_flags[i])]
            )
        for q in qs:
            fit = result.error_fits[q]
            fh.write(
                f"# L{_qname(q)} exponent {_fmt(fit.slope)} predicted {_fmt(e.predicted_error_exponent(q))}"
                f" r2 {_fmt(fit.r_squared)}\n"
            )
        nf = result.native_fit
        fh.write(
            f"# native exponent {_fmt(nf.slope)} predicted {_fmt(e.predicted_native_exponent)} r2 {_fmt(nf.r_squared)}\n"
        )
        if result.pre_asymptotic:
            fh.write("# pre-asymptotic: some fit has r2 below 0.95\n")
    return path
