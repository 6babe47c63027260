import numpy as np
import pytest

from surfarea import (
    UNIT_SQUARE,
    Domain,
    GridField,
    OrientedRect,
    Regularity,
    ScalarField,
    cantor,
    catalog_fields,
    make_builtin,
)
from surfarea.geocze import geocze_area
from surfarea.mollify import (
    MollifiedField,
    integral_mean,
    integral_mean_partials,
    l1_distance,
    l1_norm,
    shrunken_domain,
)
from surfarea.quasilinear import sup_distance

H_SEQ = (0.1, 0.05, 0.025, 0.0125)
SUB = UNIT_SQUARE.centered_subrect(0.5)


def test_shrunken_domain():
    assert shrunken_domain(UNIT_SQUARE, 0.1).bounds == pytest.approx((0.1, 0.9, 0.1, 0.9))
    for h in (0, 0.5, -0.1):
        with pytest.raises(ValueError):
            shrunken_domain(UNIT_SQUARE, h)
    with pytest.raises(ValueError):
        integral_mean(make_builtin("steiner_f1", ["exact"]), 1.0)


def test_mean_of_const_and_plane():
    x, y = np.random.default_rng(0).uniform(0.2, 0.8, (2, 200))
    fh = integral_mean(make_builtin("const", [3]), 0.1)
    assert np.allclose(fh(x, y), 3, atol=1e-14)
    plane = make_builtin("plane", [1.5, -2, 0.3])
    ph = integral_mean(plane, 0.2)
    assert isinstance(ph, MollifiedField) and ph.regularity is Regularity.C1
    assert ph.domain.bounds == pytest.approx((0.2, 0.8, 0.2, 0.8))
    assert np.max(np.abs(ph(x, y) - plane(x, y))) < 1e-13


def test_step_ramp():
    fh = integral_mean(make_builtin("step_x", [0.5]), 0.1)
    x = np.linspace(0.1, 0.9, 161)
    ramp = np.clip((x - 0.4) / 0.2, 0, 1)
    for y in (0.15, 0.5, 0.85):
        got = np.broadcast_to(fh(x, y), x.shape)
        # the step is discontinuous inside the window, so this is only quadrature accurate
        assert np.max(np.abs(got - ramp)) < 0.02
    far = np.array([0.2, 0.35, 0.65, 0.8])
    assert np.allclose(fh(far, 0.5), [0, 0, 1, 1], atol=1e-14)


def test_partials_examples():
    assert integral_mean_partials(make_builtin("plane", [1, 2, 0]), 0.1, 0.4, 0.6) == pytest.approx((1, 2), abs=1e-10)
    assert integral_mean_partials(make_builtin("const", [7]), 0.1, 0.4, 0.6) == (0.0, 0.0)
    gx, gy = integral_mean_partials(make_builtin("paraboloid"), 0.05, 0.5, 0.5)
    assert abs(gx - 1) < 1e-6 and abs(gy - 1) < 1e-6
    with pytest.raises(ValueError):
        integral_mean_partials(make_builtin("paraboloid"), 0.1, 0.05, 0.5)


@pytest.mark.parametrize("name", ["paraboloid", "cylinder_sq", "wavy"])
def test_partials_match_differences(name):
    if name == "wavy":
        f = ScalarField(UNIT_SQUARE, lambda x, y: np.sin(5 * x) * np.cos(3 * y) + x * y, None)
    else:
        f = make_builtin(name)
    h, s = 0.1, 1e-4
    fh = integral_mean(f, h)
    for x, y in [(0.3, 0.4), (0.55, 0.7), (0.8, 0.2)]:
        gx, gy = integral_mean_partials(f, h, x, y)
        nx = (float(fh(x + s, y)) - float(fh(x - s, y))) / (2 * s)
        ny = (float(fh(x, y + s)) - float(fh(x, y - s))) / (2 * s)
        assert abs(gx - nx) < 1e-5 * max(1, abs(gx)) and abs(gy - ny) < 1e-5 * max(1, abs(gy))


def test_partials_of_rough_fields_closed_form():
    # for x-only sources f_h(x) is the average of f over [x - h, x + h]
    h = 0.1
    x = np.array([0.15, 0.42, 0.55, 0.9])
    gx, gy = np.vectorize(lambda t: integral_mean_partials(make_builtin("step_x", [0.5]), h, t, 0.5))(x)
    assert np.allclose(gx, np.where(np.abs(x - 0.5) < h, 1 / (2 * h), 0)) and np.all(gy == 0)
    c = make_builtin("cantor", ["exact"])
    for t in x:
        px, _ = integral_mean_partials(c, h, t, 0.3)
        assert abs(px - (cantor(t + h) - cantor(t - h)) / (2 * h)) < 1e-12


def test_analytic_gradient_is_attached():
    fh = integral_mean(make_builtin("paraboloid"), 0.05)
    gx, gy = fh.grad(np.array([0.3]), np.array([0.6]))
    assert abs(gx[0] - 0.6) < 1e-10 and abs(gy[0] - 1.2) < 1e-10


def test_l1_examples():
    assert abs(l1_norm(make_builtin("const", [-2])) - 2) < 1e-14
    assert abs(l1_norm(make_builtin("plane", [1, 0, -0.5])) - 0.25) < 1e-14
    assert abs(l1_norm(make_builtin("step_x", [0.5])) - 0.5) < 1e-14
    with pytest.raises(ValueError):
        l1_norm(make_builtin("paraboloid"), OrientedRect(0, 2, 0, 1))


def test_contraction_random_grids():
    rng = np.random.default_rng(7)
    for _ in range(10):
        f = GridField(rng.normal(size=(9, 9)), UNIT_SQUARE).to_field()
        h = rng.uniform(0.02, 0.2)
        fh = integral_mean(f, h)
        assert l1_norm(fh, panels=4) <= l1_norm(f) + 1e-6


@pytest.mark.parametrize("f", [f for f in catalog_fields() if f.regularity is not Regularity.INTEGRABLE],
                         ids=lambda f: f.name)
def test_uniform_convergence_on_subsquare(f):
    sub = f.domain.centered_subrect(0.5)
    d = [sup_distance(integral_mean(f, h), f, 128, sub) for h in H_SEQ]
    assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
    # the x sin(1/x^2) wiggle is only resolved once h is below its local period
    assert d[-1] < 0.1


def test_area_not_increased_by_mollification():
    for name, params in [("paraboloid", []), ("cantor", [6]), ("cylinder_sq", []), ("step_x", [0.5])]:
        f = make_builtin(name, params)
        full = geocze_area(f, 7).estimate
        for h in (0.1, 0.05):
            sub = geocze_area(integral_mean(f, h), 5, rect=SUB).estimate
            assert sub <= full + 1e-4, (name, h)


def test_area_converges_for_c1_fields():
    f = make_builtin("paraboloid")
    full = geocze_area(f, 7).estimate
    gaps = [full - geocze_area(integral_mean(f, h, grid_level=7), 7).estimate for h in H_SEQ]
    # the loss is dominated by the shrinking of Q_h, so it halves with h
    assert all(g > 0 for g in gaps)
    ratios = np.array(gaps[1:]) / np.array(gaps[:-1])
    assert np.all(np.abs(ratios - 0.5) < 0.05)


def test_step_l1_witness():
    f = make_builtin("step_x", [0.5])
    d = []
    for h in H_SEQ:
        fh = integral_mean(f, h)
        d.append(l1_distance(fh, f, fh.domain))
    # two triangles of area h/4 per unit height, times the shrunken height
    expect = [h / 2 * (1 - 2 * h) for h in H_SEQ]
    assert np.allclose(d, expect, rtol=0.05)
    assert all(b < a for a, b in zip(d, d[1:]))


def test_grid_mode():
    f = make_builtin("paraboloid")
    exact = integral_mean(f, 0.05)
    grid = integral_mean(f, 0.05, grid_level=6)
    assert exact.mode == "exact" and grid.mode == "grid6"
    x, y = np.random.default_rng(3).uniform(0.05, 0.95, (2, 500))
    assert np.max(np.abs(grid(x, y) - exact(x, y))) < 1e-3


def test_general_domain():
    fh = integral_mean(make_builtin("steiner_f2", ["exact"]), 0.25)
    assert fh.domain.bounds == (0.25, 1.75, 0.25, 1.75)
    assert Domain(0, 2, 0, 2).contains_rect(fh.domain)
