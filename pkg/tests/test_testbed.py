import numpy as np
import pytest

from smoothscope.geometry import PointSet, fill_distance
from smoothscope.testbed import (
    BUNNY_CENTER,
    FUNCTIONS,
    bunny_3d,
    composite_2d,
    get_function,
    grid_points,
    halton,
    halton_points,
    piecewise_1d,
)

PRIMES = (2, 3, 5, 7, 11, 13)


def radical_inverse(i, base):
    out, f = 0.0, 1.0 / base
    while i:
        i, digit = divmod(i, base)
        out += digit * f
        f /= base
    return out


def test_piecewise_values():
    assert piecewise_1d(-0.5) == 6.0
    assert piecewise_1d(0.75) == pytest.approx(0.2, abs=1e-15)
    assert piecewise_1d(-0.3) == pytest.approx(6.1, abs=1e-14)


def test_piecewise_jump_and_corners():
    eps = 1e-12
    assert piecewise_1d(-0.4 + eps) - piecewise_1d(-0.4 - eps) == pytest.approx(0.1, abs=1e-9)
    assert abs(piecewise_1d(0.55 + eps) - piecewise_1d(0.55 - eps)) > 1.0
    d = 1e-6
    for x in (-0.35, -0.25, -0.15, -0.05):
        left = (piecewise_1d(x) - piecewise_1d(x - d)) / d
        right = (piecewise_1d(x + d) - piecewise_1d(x)) / d
        assert abs(right - left) > 1.0, x


def test_composite_values_and_features():
    assert np.isfinite(composite_2d(np.random.default_rng(0).random((100, 2)) * 6)).all()
    # Block adds exactly one across its top edge.
    below, above = composite_2d([[4.0, 1.1 - 1e-9]]), composite_2d([[4.0, 1.1 + 1e-9]])
    assert below - above == pytest.approx(1.0, abs=1e-6)
    fn = get_function("composite_2d")
    kinds = {a.kind for a in fn.annotations}
    assert kinds == {"jump", "corner", "point-singularity", "smooth"}
    for a in fn.annotations:
        assert fn.domain.contains(a.locations).all()


def test_bunny_values():
    c = np.array(BUNNY_CENTER)
    assert bunny_3d([[0.0, 0.0, -0.9]]) == 1.0
    for t in (0.01, 0.1, 0.25):
        assert bunny_3d([c + [0, 0, t]]) == pytest.approx(4.0)
        assert bunny_3d([c + [t, 0, 0]]) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        bunny_3d([c])


def test_bunny_lower_region_and_bounds():
    P = np.random.default_rng(1).uniform(-1, 1, (20000, 3))
    v = bunny_3d(P)
    lower = P[:, 2] <= 0.5 * np.sin(5 * P[:, 0] + 2 * P[:, 1])
    assert np.all(v[lower] == 1.0)
    assert np.all(np.abs(v[~lower]) <= 4.0)


def test_halton_examples():
    assert np.array_equal(halton(4, 1).coords[:, 0], [0.5, 0.25, 0.75, 0.125])
    assert np.allclose(halton(2, 2).coords, [[0.5, 1 / 3], [0.25, 2 / 3]], rtol=1e-15)


@pytest.mark.parametrize("dim", [1, 2, 3, 6])
def test_halton_matches_radical_inverse(dim):
    pts = halton(200, dim).coords
    ref = np.array([[radical_inverse(i, PRIMES[k]) for k in range(dim)] for i in range(1, 201)])
    assert np.allclose(pts, ref, rtol=0, atol=1e-15)
    assert np.all((pts > 0) & (pts < 1))
    assert len(np.unique(pts, axis=0)) == 200


def test_halton_fill_distance_decreases():
    cand = PointSet(np.array([(a, b) for a in np.linspace(0, 1, 201) for b in np.linspace(0, 1, 201)]))
    h = [fill_distance(halton(n, 2), cand) for n in (100, 400, 1600)]
    assert h[0] > h[1] > h[2]


def test_samplers_on_domain():
    fn = get_function("composite_2d")
    assert fn.domain.contains(halton_points(500, fn.domain).coords).all()
    G = grid_points(5, fn.domain)
    assert len(G) == 25 and G.coords.min() == 0.0 and G.coords.max() == 6.0


def test_registry():
    assert set(FUNCTIONS) == {"piecewise_1d", "abs_1d", "step_1d", "sine_1d", "composite_2d", "bunny_3d"}
    with pytest.raises(KeyError):
        get_function("nope")
    for fn in FUNCTIONS.values():
        x = halton_points(10, fn.domain).coords
        assert fn(x).shape == (10,)
