"""Matérn (Sobolev-spline) radial kernels.

The radial profile is the bare Sobolev-spline form

    phi_nu(s) = 2^(1-nu) / Gamma(nu) * s^nu * K_nu(s),   s = r / lengthscale,

normalized so ``phi_nu(0) = 1``.  No ``sqrt(2 nu)`` factor is folded into the
argument, which is where this convention differs from most GP libraries.
The order is ``nu = tau - d/2`` so that the native space is norm-equivalent
to the Sobolev space of order ``tau``.

For half-integer ``nu = p + 1/2`` the profile is ``exp(-s)`` times a
degree-``p`` polynomial and is evaluated in closed form.  Other orders are
available through scipy's modified Bessel function when explicitly enabled.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln, kve

from .geometry import GeometryError, PointSet

__all__ = [
    "KernelError",
    "KernelSpec",
    "cross_matrix",
    "gram_matrix",
    "half_integer_order",
    "matern_phi",
    "matern_profile",
]

_BESSEL_SMALL_S = 1e-10


class KernelError(ValueError):
    """Unsupported kernel parameters."""


def half_integer_order(nu: float) -> int | None:
    """Return ``p`` when ``nu == p + 1/2`` for an integer ``p >= 0``, else ``None``."""
    p = nu - 0.5
    if p >= 0 and abs(p - round(p)) < 1e-12:
        return int(round(p))
    return None


@dataclass(frozen=True)
class KernelSpec:
    """Matérn kernel of Sobolev smoothness ``tau`` in dimension ``dim``.

    Set ``bessel=True`` to allow orders that are not half-integers.
    """

    tau: float
    dim: int
    lengthscale: float
    bessel: bool = False

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise KernelError(f"dim must be a positive integer, got {self.dim}")
        if not self.tau > self.dim / 2:
            raise KernelError(f"tau={self.tau} must exceed dim/2={self.dim / 2}")
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0):
            raise KernelError(f"lengthscale must be positive, got {self.lengthscale}")
        if not self.bessel and half_integer_order(self.nu) is None:
            raise KernelError(
                f"nu={self.nu} is not a half-integer; enable the Bessel path for general orders"
            )

    @property
    def nu(self) -> float:
        return float(self.tau) - self.dim / 2

    def with_lengthscale(self, lengthscale: float) -> "KernelSpec":
        return KernelSpec(self.tau, self.dim, lengthscale, self.bessel)


def _half_integer_coeffs(p: int) -> np.ndarray:
    # phi(s) = exp(-s) * sum_i a_i s^i, from the finite expansion of K_{p+1/2}.
    coeffs = np.zeros(p + 1)
    scale = factorial(p) / factorial(2 * p)
    for i in range(p + 1):
        power = p - i
        coeffs[power] = scale * factorial(p + i) / (factorial(i) * factorial(p - i)) * 2.0**power
    return coeffs


def matern_profile(nu: float, s, *, bessel: bool = False) -> np.ndarray:
    """Evaluate ``phi_nu`` at scaled radii ``s >= 0`` (array in, array out)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise KernelError("radii must be nonnegative")
    p = half_integer_order(nu)
    if p is not None:
        coeffs = _half_integer_coeffs(p)
        poly = np.zeros_like(s)
        for a in coeffs[::-1]:
            poly = poly * s + a
        return poly * np.exp(-s)
    if not bessel:
        raise KernelError(f"nu={nu} needs the Bessel path")
    out = np.ones_like(s)
    big = s >= _BESSEL_SMALL_S
    sb = s[big]
    # Log form with the scaled Bessel function avoids overflow at small s and
    # underflow at large s.
    log_val = (1 - nu) * np.log(2.0) - gammaln(nu) + nu * np.log(sb) + np.log(kve(nu, sb)) - sb
    out[big] = np.exp(log_val)
    return out


def matern_phi(spec: KernelSpec, r):
    """Kernel profile at physical radius ``r`` (scalar or array)."""
    val = matern_profile(spec.nu, np.asarray(r, dtype=float) / spec.lengthscale, bessel=spec.bessel)
    return float(val) if val.ndim == 0 else val


def _coords(P) -> np.ndarray:
    return P.coords if isinstance(P, PointSet) else PointSet(P, check=False).coords


def cross_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Matrix ``phi(|a_i - b_j|)`` between two point sets."""
    a, b = _coords(A), _coords(B)
    if a.shape[1] != b.shape[1]:
        raise GeometryError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return matern_profile(spec.nu, cdist(a, b) / spec.lengthscale, bessel=spec.bessel)


def gram_matrix(spec: KernelSpec, X: PointSet) -> np.ndarray:
    """Symmetric interpolation matrix on ``X`` (unit diagonal)."""
    if not isinstance(X, PointSet):
        X = PointSet(X)
    return cross_matrix(spec, X, X)
