"""Kernel interpolation: solve, evaluate, and native-space norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .geometry import GeometryError, PointSet
from .kernels import KernelSpec, cross_matrix, gram_matrix

__all__ = [
    "JITTER_LADDER",
    "ConditioningError",
    "Interpolant",
    "evaluate",
    "interpolate",
    "native_norm_sq_of_difference",
]

#: Relative diagonal shifts tried (times the system size) when Cholesky fails.
JITTER_LADDER = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

_EVAL_CHUNK = 4096


class ConditioningError(np.linalg.LinAlgError):
    """Cholesky failed on every rung of the jitter ladder."""

    def __init__(self, n: int, level: int | None = None):
        self.n = n
        self.level = level
        where = "" if level is None else f" at level {level}"
        super().__init__(f"interpolation matrix of size {n} not factorizable{where}")


@dataclass(frozen=True)
class Interpolant:
    """``s(x) = sum_i coeffs[i] * phi(|x - centers[i]|)``.

    ``jitter_used`` is the diagonal shift that made the factorization succeed
    (0 for a clean solve); ``native_sq`` is ``coeffs . values``.
    """

    spec: KernelSpec
    centers: PointSet
    coeffs: np.ndarray
    values: np.ndarray
    jitter_used: float = 0.0

    @property
    def native_sq(self) -> float:
        return max(float(self.coeffs @ self.values), 0.0)

    @classmethod
    def zero(cls, spec: KernelSpec) -> "Interpolant":
        """The zero function, represented on an empty center set."""
        empty = PointSet(np.empty((0, spec.dim)), check=False)
        return cls(spec, empty, np.empty(0), np.empty(0))


def _factor(K: np.ndarray) -> tuple[tuple, float]:
    n = K.shape[0]
    try:
        return sla.cho_factor(K, lower=True, check_finite=False), 0.0
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(n)
    for rung in JITTER_LADDER:
        eps = rung * n
        try:
            return sla.cho_factor(K + eps * eye, lower=True, check_finite=False), eps
        except np.linalg.LinAlgError:
            continue
    raise ConditioningError(n)


def interpolate(spec: KernelSpec, X: PointSet, f) -> Interpolant:
    """Interpolate values ``f`` given at the sites ``X``."""
    f = np.asarray(f, dtype=float).reshape(-1)
    if len(f) != len(X):
        raise ValueError(f"{len(f)} values for {len(X)} sites")
    if X.dim != spec.dim:
        raise GeometryError(f"kernel is {spec.dim}-D but sites are {X.dim}-D")
    if len(X) == 0:
        return Interpolant.zero(spec)
    factor, eps = _factor(gram_matrix(spec, X))
    coeffs = sla.cho_solve(factor, f, check_finite=False)
    return Interpolant(spec, X, coeffs, f.copy(), eps)


def evaluate(interp: Interpolant, Y) -> np.ndarray:
    """Values of the interpolant at the points ``Y``."""
    Y = Y if isinstance(Y, PointSet) else PointSet(Y, check=False)
    if Y.dim != interp.spec.dim:
        raise GeometryError(f"kernel is {interp.spec.dim}-D but points are {Y.dim}-D")
    out = np.zeros(len(Y))
    if len(interp.coeffs) == 0:
        return out
    for start in range(0, len(Y), _EVAL_CHUNK):
        block = Y.coords[start : start + _EVAL_CHUNK]
        out[start : start + len(block)] = cross_matrix(interp.spec, block, interp.centers) @ interp.coeffs
    return out


def native_norm_sq_of_difference(fine: Interpolant, coarse: Interpolant) -> float:
    """Squared native norm of ``fine - coarse``.

    Evaluated as the quadratic form of the stacked signed coefficients with
    the joint kernel matrix, split into its three blocks.
    """
    if fine.spec != coarse.spec:
        raise ValueError("interpolants use different kernels")
    a, b = fine.coeffs, coarse.coeffs
    total = a @ (gram_matrix(fine.spec, fine.centers) @ a) if len(a) else 0.0
    if len(b):
        total += b @ (gram_matrix(coarse.spec, coarse.centers) @ b)
        if len(a):
            total -= 2.0 * (a @ (cross_matrix(fine.spec, fine.centers, coarse.centers) @ b))
    return max(float(total), 0.0)
