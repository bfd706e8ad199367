import numpy as np
import pytest

from smoothscope.geometry import BoundingBox, PointSet, fill_distance
from smoothscope.rules import (
    LENGTHSCALE_RULES,
    RADIUS_RULES,
    LocalContext,
    Rule,
    RuleError,
    global_fill_distance,
    lengthscale_from_rule,
    parse_rule,
    stencil_radius_from_rule,
)


def box(lo, hi):
    return BoundingBox(np.atleast_1d(np.array(lo, dtype=float)), np.atleast_1d(np.array(hi, dtype=float)))


def test_lengthscale_examples():
    assert lengthscale_from_rule(Rule("stencil_radius_x2"), LocalContext(stencil_radius=0.05)) == 0.1
    assert lengthscale_from_rule(Rule("neighbor_diam_x2"), LocalContext(neighbor_box=box(0.2, 0.5))) == pytest.approx(0.6)
    ctx = LocalContext(neighbor_box=box(0.0, 0.4), global_fill=0.01)
    assert lengthscale_from_rule(Rule("fill_times_diam"), ctx) == pytest.approx(0.004)
    assert lengthscale_from_rule(Rule("fixed", 0.3), LocalContext()) == 0.3


def test_lengthscale_errors():
    with pytest.raises(RuleError):
        lengthscale_from_rule(Rule("stencil_radius_x2"), LocalContext())
    with pytest.raises(RuleError):
        lengthscale_from_rule(Rule("neighbor_diam_x2"), LocalContext(neighbor_box=box(0.2, 0.2)))


def test_radius_rules():
    assert stencil_radius_from_rule(Rule("fill_distance"), 0.01) == 0.01
    assert stencil_radius_from_rule(Rule("fill_times", 3.0), 0.01) == pytest.approx(0.03)
    assert stencil_radius_from_rule(Rule("fixed", 0.02), None) == 0.02
    with pytest.raises(RuleError):
        stencil_radius_from_rule(Rule("fill_distance"), None)


def test_parse_rule():
    assert parse_rule("fixed(0.02)", LENGTHSCALE_RULES) == Rule("fixed", 0.02)
    assert parse_rule(" neighbor_diam_x2 ", LENGTHSCALE_RULES) == Rule("neighbor_diam_x2")
    assert parse_rule("fill_times( 2 )", RADIUS_RULES) == Rule("fill_times", 2.0)
    for bad in ("fixed", "fixed(-1)", "fixed(abc)", "stencil_radius_x2(3)", "bogus", "fill_distance"):
        with pytest.raises(RuleError):
            parse_rule(bad, LENGTHSCALE_RULES)
    assert str(Rule("fixed", 0.5)) == "fixed(0.5)"


def test_global_fill_distance_on_grid():
    X = PointSet(np.linspace(0, 1, 11))
    assert global_fill_distance(X) == pytest.approx(0.05, rel=1e-12)
    rng = np.random.default_rng(0)
    Y = PointSet(rng.random((50, 2)))
    g = np.linspace(Y.coords.min(0), Y.coords.max(0), 400)
    dense = PointSet(np.array([(a, b) for a in g[:, 0] for b in g[:, 1]]))
    # The coarser built-in candidate grid can only underestimate, and not by much.
    est = global_fill_distance(Y)
    ref = fill_distance(Y, dense)
    assert 0.85 * ref <= est <= ref * (1 + 1e-12)
