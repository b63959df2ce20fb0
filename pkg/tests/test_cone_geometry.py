"""Cone curves: validation, moving frame, invariants, arc length."""

import numpy as np
import pytest

from conftest import circle_lift, lissajous_lift, perturbed_circle
from coneflow.cone_geometry import (ConeCurve, cone_frame, cone_invariants,
                                    cone_invariants_closed_form,
                                    cone_pattern_defect, maurer_cartan,
                                    normalization_residuals,
                                    reparametrize_arclength,
                                    validate_cone_curve, xi2_closed_form)
from coneflow.errors import (ChartBreakdown, GeometryError, RadialPoint)
from coneflow.lorentz_core import (apply_lorentz, cone_residual,
                                   lorentz_residual, random_lorentz)
from coneflow.periodic_calculus import PeriodicGrid

# hand computation for u = (1/2, cos x, sin x, 1):
# <u',u'> = 1, and the normalized frame recursion collapses to constants
CIRCLE_INVARIANTS = (1.0, -0.5, 0.0)


def test_validate_accepts_test_curves():
    for curve in (circle_lift(128), perturbed_circle(128, 0),
                  lissajous_lift(128)):
        validate_cone_curve(curve)


def test_validate_rejects_off_cone():
    curve = circle_lift(64)
    bad = curve.samples.copy()
    bad[:, 0] += 1e-6
    with pytest.raises(GeometryError, match="off the light cone"):
        validate_cone_curve(ConeCurve(curve.grid, bad))


def test_validate_rejects_nonfinite():
    curve = circle_lift(64)
    bad = curve.samples.copy()
    bad[5, 2] = np.nan
    with pytest.raises(GeometryError, match="non-finite"):
        validate_cone_curve(ConeCurve(curve.grid, bad))


def test_validate_rejects_chart_breakdown():
    g = PeriodicGrid(64, 2 * np.pi)
    x = g.nodes
    # scale a cone curve so u3 crosses zero: s*u stays on the cone
    s = np.sin(x)
    u = np.stack([0.5 * s, s * np.cos(x), s * np.sin(x), s], axis=1)
    with pytest.raises(ChartBreakdown):
        validate_cone_curve(ConeCurve(g, u))


def test_validate_rejects_radial_point():
    # phi(x) = x - sin x has phi'(0) = 0, so the lifted speed vanishes there
    g = PeriodicGrid(128, 2 * np.pi)
    phi = g.nodes - np.sin(g.nodes)
    m1, m2 = np.cos(phi), np.sin(phi)
    u = np.stack([0.5 * (m1 ** 2 + m2 ** 2), m1, m2, np.ones(128)], axis=1)
    with pytest.raises(RadialPoint) as err:
        validate_cone_curve(ConeCurve(g, u))
    assert err.value.context["node"] == 0


@pytest.mark.parametrize("reader", [cone_invariants_closed_form,
                                    cone_invariants])
def test_circle_invariants(reader):
    # the closed-form k2 carries third-derivative roundoff ~ N^3 eps
    k = reader(circle_lift(256))
    k0, k1, k2 = CIRCLE_INVARIANTS
    assert np.max(np.abs(k.k0.values - k0)) < 1e-10
    assert np.max(np.abs(k.k1.values - k1)) < 1e-10
    assert np.max(np.abs(k.k2.values - k2)) < 1e-8


def test_closed_form_matches_frame_read():
    curve = perturbed_circle(256, 3)
    a = cone_invariants_closed_form(curve)
    b = cone_invariants(curve)
    for name in ("k0", "k1", "k2"):
        dev = np.max(np.abs(getattr(a, name).values - getattr(b, name).values))
        assert dev < 1e-8, name


def test_frame_in_group_and_normalized():
    curve = perturbed_circle(256, 1)
    frames = cone_frame(curve)
    assert max(lorentz_residual(r) for r in frames.rho) < 1e-10
    res = normalization_residuals(curve, frames)
    worst = max(v for k, v in res.items() if k != "worst_node")
    assert worst < 1e-8


def test_pattern_defect_small_on_smooth_curve():
    K = maurer_cartan(cone_frame(perturbed_circle(256, 2)))
    assert cone_pattern_defect(K) < 1e-7


def test_xi2_closed_form_matches_enforced_entry():
    curve = perturbed_circle(256, 4)
    factors = cone_frame(curve).factors
    got = xi2_closed_form(curve)
    assert np.max(np.abs(factors.xi[:, 1] - got)) < 1e-8


def test_invariants_are_lorentz_equivariant():
    curve = perturbed_circle(256, 5)
    k = cone_invariants_closed_form(curve)
    theta = random_lorentz(17, 0.4)
    moved = ConeCurve(curve.grid, apply_lorentz(theta, curve.samples))
    km = cone_invariants_closed_form(moved)
    for name in ("k0", "k1", "k2"):
        dev = np.max(np.abs(getattr(k, name).values
                            - getattr(km, name).values))
        assert dev < 1e-9, name


def test_reparametrize_gives_unit_speed_on_cone():
    curve = perturbed_circle(256, 6)
    flat = reparametrize_arclength(curve)
    k = cone_invariants_closed_form(flat)
    assert np.max(np.abs(k.k0.values - 1.0)) < 1e-10
    assert np.max(cone_residual(flat.samples)) < 1e-12
    # total arc length becomes the new period
    from coneflow.periodic_calculus import quadrature
    k0_old = cone_invariants_closed_form(curve).k0.values
    assert flat.grid.length == pytest.approx(
        quadrature(k0_old, curve.grid.length), rel=1e-10)


def test_reparametrize_preserves_arclength_integrals():
    # Maurer-Cartan entries carry weight one in k0 (k1 = k0 * arc-length
    # invariant), so int k1 dx and int k1^2/k0 dx are the scalars a
    # reparametrization must preserve.
    from coneflow.periodic_calculus import quadrature
    curve = perturbed_circle(512, 7)
    flat = reparametrize_arclength(curve)
    k = cone_invariants_closed_form(curve)
    kf = cone_invariants_closed_form(flat)
    before = quadrature(k.k1.values, curve.grid.length)
    after = quadrature(kf.k1.values, flat.grid.length)
    assert before == pytest.approx(after, rel=1e-10)
    before = quadrature(k.k1.values ** 2 / k.k0.values, curve.grid.length)
    after = quadrature(kf.k1.values ** 2, flat.grid.length)
    assert before == pytest.approx(after, rel=1e-10)


def test_invariant_reads_scale_with_speed():
    # traversing the circle at variable speed scales every entry by k0
    g = PeriodicGrid(512, 2 * np.pi)
    y = g.nodes + 0.3 * np.sin(g.nodes)
    u = np.stack([0.5 * np.ones(512), np.cos(y), np.sin(y), np.ones(512)],
                 axis=1)
    k = cone_invariants_closed_form(ConeCurve(g, u))
    want_k0 = 1.0 + 0.3 * np.cos(g.nodes)
    assert np.max(np.abs(k.k0.values - want_k0)) < 1e-10
    assert np.max(np.abs(k.k1.values + 0.5 * want_k0)) < 1e-9
