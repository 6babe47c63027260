import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfarea import UNIT_SQUARE, Regularity, catalog_fields, make_builtin
from surfarea.geocze import Subdivision, geocze_area
from surfarea.quasilinear import elementary_area, interpolate_quasilinear, quasilinear_from_grid
from surfarea.steiner import (
    common_refinement,
    equality_flatness_residual,
    midpoint,
    steiner_gap_quasilinear,
    steiner_gap_subdivision,
    steiner_gap_terms,
    vector_norm_superadditivity,
)


def ql(vals, split="main"):
    return quasilinear_from_grid(np.asarray(vals, float), UNIT_SQUARE, split)


def direct_gap(p, q):
    return 0.5 * (elementary_area(p) + elementary_area(q)) - elementary_area((p + q).scaled(0.5))


def test_vector_lemma_examples():
    assert vector_norm_superadditivity([(1, 0, 0), (2, 0, 0)]) == (3.0, 3.0, True)
    lhs, rhs, ok = vector_norm_superadditivity([(1, 0, 0), (0, 1, 0)])
    assert lhs == 2 and abs(rhs - math.sqrt(2)) < 1e-15 and ok
    rng = np.random.default_rng(0)
    for _ in range(100):
        assert vector_norm_superadditivity(rng.normal(size=(rng.integers(1, 6), 3)))[2]
    with pytest.raises(ValueError):
        vector_norm_superadditivity([])


def test_midpoint_combinator():
    f1, f2 = make_builtin("paraboloid"), make_builtin("step_x", [0.5])
    m = midpoint(f1, f2)
    assert m.regularity is Regularity.INTEGRABLE
    assert np.array_equal(m.x_breaks, [0.5])
    x, y = np.random.default_rng(1).uniform(0, 1, (2, 50))
    assert np.allclose(m(x, y), 0.5 * (f1(x, y) + f2(x, y)))
    with pytest.raises(ValueError):
        midpoint(f1, make_builtin("steiner_f1", ["exact"]))


def test_subdivision_gap_examples():
    p = make_builtin("paraboloid")
    for k in (0, 2, 4):
        assert steiner_gap_subdivision(p, p, Subdivision.dyadic(UNIT_SQUARE, k)) == 0
    up, down = make_builtin("plane", [1, 0, 0]), make_builtin("plane", [-1, 0, 0])
    rng = np.random.default_rng(2)
    for _ in range(5):
        xs = np.concatenate([[0], np.sort(rng.uniform(0, 1, 3)), [1]])
        D = Subdivision(xs, [0, 0.4, 1])
        assert abs(steiner_gap_subdivision(up, down, D) - (math.sqrt(2) - 1)) < 1e-12


def test_subdivision_gap_catalog_pairs():
    fields = [f for f in catalog_fields() if f.domain.bounds == UNIT_SQUARE.bounds]
    worst = math.inf
    for i, f1 in enumerate(fields):
        for f2 in fields[i + 1:]:
            for k in range(0, 6):
                worst = min(worst, steiner_gap_subdivision(f1, f2, Subdivision.dyadic(UNIT_SQUARE, k)))
    assert worst >= -1e-9


def test_cantor_pair_deep():
    # both sheets and their midpoint have area 6; the dyadic ladder needs deep levels
    f1, f2 = make_builtin("steiner_f1", ["exact"]), make_builtin("steiner_f2", ["exact"])
    est = [geocze_area(f, 20).estimate for f in (f1, f2, midpoint(f1, f2))]
    assert max(est) - min(est) < 0.1
    assert all(abs(e - 6) < 0.1 for e in est)


def test_quasilinear_gap_examples():
    p = interpolate_quasilinear(make_builtin("paraboloid"), 2)
    assert steiner_gap_quasilinear(p, p) == 0
    a = interpolate_quasilinear(make_builtin("plane", [1, 0, 0]), 3)
    b = interpolate_quasilinear(make_builtin("plane", [0, 1, 0]), 3)
    expect = math.sqrt(2) - math.sqrt(1.5)
    assert abs(steiner_gap_quasilinear(a, b) - expect) < 1e-12
    assert abs(direct_gap(a, b) - expect) < 1e-12


def test_random_pairs_nonnegative_and_match_direct():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p, q = ql(rng.normal(size=(5, 5))), ql(rng.normal(size=(5, 5)))
        gap = steiner_gap_quasilinear(p, q)
        assert gap >= -1e-12
        assert abs(gap - direct_gap(p, q)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_equality_iff_equal_gradients(seed, shift):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(5, 5))
    p = ql(vals)
    # a shift leaves every gradient unchanged: zero gap
    assert abs(steiner_gap_quasilinear(p, ql(vals + shift))) < 1e-12
    # changing one node changes the gradients of its triangles: positive gap there only
    bumped = vals.copy()
    bumped[2, 2] += 0.5
    terms = steiner_gap_terms(p, ql(bumped))
    touched = np.abs(ql(bumped).coeffs[:, :2] - p.coeffs[:, :2]).max(axis=1) > 0
    assert np.all(terms[touched] > 1e-12) and np.all(np.abs(terms[~touched]) < 1e-15)


def test_incompatible_meshes():
    with pytest.raises(ValueError, match="incompatible"):
        steiner_gap_quasilinear(ql(np.zeros((3, 3))), ql(np.zeros((5, 5))))
    with pytest.raises(ValueError, match="incompatible"):
        steiner_gap_quasilinear(ql(np.zeros((3, 3))), ql(np.zeros((3, 3)), "anti"))


def test_overlay_refines_to_finer_grid():
    p = interpolate_quasilinear(make_builtin("paraboloid"), 2)
    q = interpolate_quasilinear(make_builtin("cylinder_sq"), 4)
    pr, qr = common_refinement(p, q)
    assert pr.grid == qr.grid == (16, 16, "main")
    gap = steiner_gap_quasilinear(p, q, overlay=True)
    assert gap >= 0 and abs(gap - direct_gap(pr, qr)) < 1e-12
    with pytest.raises(ValueError):
        common_refinement(ql(np.zeros((4, 4))), ql(np.zeros((5, 5))))


def test_flatness_residual_examples():
    p = make_builtin("paraboloid")
    assert equality_flatness_residual(p, midpoint(p, p)) < 1e-10
    assert equality_flatness_residual(make_builtin("plane", [1, 2, 0]), make_builtin("plane", [1, 2, 5])) == 0
    # grad difference (2x - 1, 2y - 2) is largest at the corner (0, 0)
    r = equality_flatness_residual(p, make_builtin("plane", [1, 2, 0]))
    assert abs(r - math.sqrt(5)) < 1e-8
    assert steiner_gap_subdivision(p, make_builtin("plane", [1, 2, 0]), Subdivision.dyadic(UNIT_SQUARE, 4)) > 0
