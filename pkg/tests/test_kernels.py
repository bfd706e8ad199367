import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import cholesky

from smoothscope.geometry import PointSet
from smoothscope.interpolation import interpolate
from smoothscope.kernels import KernelError, KernelSpec, cross_matrix, gram_matrix, matern_phi, matern_profile

mpmath.mp.dps = 40


def oracle(nu, s):
    """2^(1-nu)/Gamma(nu) s^nu K_nu(s) in extended precision."""
    if s == 0:
        return 1.0
    nu, s = mpmath.mpf(nu), mpmath.mpf(s)
    return float(2 ** (1 - nu) / mpmath.gamma(nu) * s**nu * mpmath.besselk(nu, s))


def spec_for(nu, lengthscale=1.0, dim=1, bessel=False):
    return KernelSpec(nu + dim / 2, dim, lengthscale, bessel)


def test_examples():
    assert matern_phi(spec_for(0.5), 0.0) == 1.0
    assert matern_phi(spec_for(1.5), 1.0) == pytest.approx(2 * math.exp(-1), rel=1e-15)
    assert matern_phi(spec_for(2.5, 2.0), 2.0) == pytest.approx((1 + 1 + 1 / 3) * math.exp(-1), rel=1e-15)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5, 4.5])
def test_half_integer_forms_match_bessel_oracle(nu):
    for s in [1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0]:
        assert matern_profile(nu, s) == pytest.approx(oracle(nu, s), rel=1e-13)


@pytest.mark.parametrize("nu", [0.3, 1.0, 1.7, 2.0, 4.2, 10.0])
def test_bessel_path_matches_oracle(nu):
    for s in [1e-8, 1e-4, 0.01, 0.3, 1.0, 3.0, 10.0, 40.0]:
        assert matern_profile(nu, s, bessel=True) == pytest.approx(oracle(nu, s), rel=1e-12)


def test_bessel_path_agrees_with_closed_form():
    s = np.geomspace(1e-6, 50, 200)
    for nu in (0.5, 1.5, 2.5):
        assert np.allclose(matern_profile(nu, s, bessel=True), matern_profile(nu, s), rtol=1e-12, atol=0)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5])
@pytest.mark.parametrize("ell", [0.01, 1.0, 7.0])
def test_normalized_and_monotone(nu, ell):
    spec = spec_for(nu, ell)
    assert matern_phi(spec, 0.0) == 1.0
    r = np.geomspace(1e-6 * ell, 50 * ell, 400)
    assert np.all(np.diff(matern_phi(spec, r)) <= 0)


def test_spec_validation():
    with pytest.raises(KernelError):
        KernelSpec(0.5, 1, 1.0)
    with pytest.raises(KernelError):
        KernelSpec(3.0, 1, 0.0)
    with pytest.raises(KernelError):
        KernelSpec(2.2, 1, 1.0)
    assert KernelSpec(2.2, 1, 1.0, bessel=True).nu == pytest.approx(1.7)
    assert KernelSpec(3.5, 2, 1.0).nu == 2.5 and KernelSpec(3.0, 3, 1.0).nu == 1.5


def test_gram_examples():
    spec = spec_for(0.5)
    assert np.array_equal(gram_matrix(spec, PointSet([0.3])), [[1.0]])
    K = gram_matrix(spec, PointSet([0.0, 1.0]))
    assert np.allclose(K, [[1, math.exp(-1)], [math.exp(-1), 1]], rtol=1e-15, atol=0)
    assert np.allclose(cross_matrix(spec, PointSet([0.5]), PointSet([0.0, 1.0])), [[math.exp(-0.5)] * 2], rtol=1e-15)


def test_cross_matrix_matches_loop():
    rng = np.random.default_rng(0)
    A, B = rng.random((10, 2)), rng.random((7, 2))
    spec = spec_for(2.5, 0.4, dim=2)
    C = cross_matrix(spec, PointSet(A), PointSet(B))
    loop = np.array([[matern_phi(spec, float(np.linalg.norm(a - b))) for b in B] for a in A])
    assert np.allclose(C, loop, rtol=1e-14, atol=0)
    assert np.array_equal(cross_matrix(spec, PointSet(A), PointSet(A)), gram_matrix(spec, PointSet(A)))


def test_cholesky_reconstruction():
    X = PointSet(np.random.default_rng(1).random((30, 2)))
    K = gram_matrix(spec_for(2.5, 0.3, dim=2), X)
    L = cholesky(K, lower=True)
    assert np.max(np.abs(K - L @ L.T)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), ell=st.floats(0.05, 20.0), nu=st.sampled_from([0.5, 1.5, 2.5]))
def test_lengthscale_consistency(seed, ell, nu):
    X = np.random.default_rng(seed).random((25, 2))
    K1 = gram_matrix(spec_for(nu, ell, dim=2), PointSet(X))
    K2 = gram_matrix(spec_for(nu, 1.0, dim=2), PointSet(X / ell))
    assert np.max(np.abs(K1 - K2)) <= 1e-14


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), factor=st.floats(0.01, 10.0), nu=st.sampled_from([0.5, 1.5, 2.5]))
def test_gram_factorizes_or_uses_jitter(seed, factor, nu):
    X = PointSet(np.random.default_rng(seed).random((200, 2)))
    diam = math.sqrt(2)
    I = interpolate(spec_for(nu, factor * diam, dim=2), X, np.ones(200))
    assert I.jitter_used >= 0 and np.all(np.isfinite(I.coeffs))
