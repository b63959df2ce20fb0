"""Plane-chart curves on the conformal sphere: frame, invariants, Moebius."""

import numpy as np
import pytest

from conftest import sphere_circle, sphere_wiggle
from coneflow.errors import DegenerateSpeed, PatternViolation
from coneflow.lorentz_core import lorentz_residual, random_lorentz
from coneflow.periodic_calculus import PeriodicGrid
from coneflow.sphere_geometry import (FRAME_FROM_CLOSED_FORM, SphereCurve,
                                      moebius_apply, sphere_frame,
                                      sphere_invariants_closed_form,
                                      sphere_invariants_from_frame,
                                      sphere_maurer_cartan,
                                      sphere_normalization_residuals,
                                      sphere_pattern_defect,
                                      validate_sphere_curve)

# hand computation: straightening the unit circle maps the parameter to
# 2 tan(x/2), whose Schwarzian derivative is 1/2; kappa2 = 0 by planarity
CIRCLE_KAPPA = (0.5, 0.0)


def _schwarzian_of_half_tangent():
    # independent numerical oracle for CIRCLE_KAPPA[0]
    x = np.linspace(-1.0, 1.0, 2001)
    h = x[1] - x[0]
    f = 2.0 * np.tan(x / 2.0)
    fp = np.gradient(f, h, edge_order=2)
    fpp = np.gradient(fp, h, edge_order=2)
    fppp = np.gradient(fpp, h, edge_order=2)
    s = fppp / fp - 1.5 * (fpp / fp) ** 2
    return s[500:-500]


def test_circle_oracle_via_schwarzian():
    s = _schwarzian_of_half_tangent()
    assert np.max(np.abs(s - CIRCLE_KAPPA[0])) < 1e-6


def test_circle_invariants_closed_form():
    kap = sphere_invariants_closed_form(sphere_circle(256))
    assert np.max(np.abs(kap.kappa1.values - CIRCLE_KAPPA[0])) < 1e-9
    assert np.max(np.abs(kap.kappa2.values - CIRCLE_KAPPA[1])) < 1e-8


def test_frame_read_matches_closed_form_through_fixed_signs():
    curve = sphere_wiggle(256, 2)
    cf = sphere_invariants_closed_form(curve)
    fr = sphere_invariants_from_frame(curve)
    f1, f2 = FRAME_FROM_CLOSED_FORM
    assert np.max(np.abs(fr.kappa1.values - f1 * cf.kappa1.values)) < 1e-7
    assert np.max(np.abs(fr.kappa2.values - f2 * cf.kappa2.values)) < 1e-7


def test_frame_in_group_and_normalized():
    curve = sphere_wiggle(256, 3)
    frames = sphere_frame(curve)
    assert max(lorentz_residual(r) for r in frames.rho) < 1e-10
    res = sphere_normalization_residuals(curve, frames)
    worst = max(v for k, v in res.items() if k != "worst_node")
    assert worst < 1e-8


def test_pattern_defect_small_on_smooth_curve():
    K = sphere_maurer_cartan(sphere_wiggle(256, 4))
    assert sphere_pattern_defect(K) < 1e-7


def test_pattern_violation_on_rough_data():
    g = PeriodicGrid(64, 2 * np.pi)
    rng = np.random.default_rng(0)
    m = np.stack([np.cos(g.nodes) + 0.2 * rng.normal(size=64),
                  np.sin(g.nodes) + 0.2 * rng.normal(size=64)], axis=1)
    with pytest.raises(PatternViolation):
        sphere_invariants_from_frame(SphereCurve(g, m))


def test_validate_rejects_degenerate_speed():
    g = PeriodicGrid(128, 2 * np.pi)
    phi = g.nodes - np.sin(g.nodes)  # phi'(0) = 0
    m = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    with pytest.raises(DegenerateSpeed) as err:
        validate_sphere_curve(SphereCurve(g, m))
    assert err.value.context["node"] == 0


def test_validate_rejects_nonfinite():
    curve = sphere_circle(64)
    bad = curve.samples.copy()
    bad[3, 1] = np.inf
    with pytest.raises(DegenerateSpeed):
        validate_sphere_curve(SphereCurve(curve.grid, bad))


def test_invariants_are_moebius_equivariant():
    curve = sphere_wiggle(256, 5)
    kap = sphere_invariants_closed_form(curve)
    theta = random_lorentz(23, 0.25)
    moved = moebius_apply(theta, curve)
    kap_m = sphere_invariants_closed_form(moved)
    assert np.max(np.abs(kap.kappa1.values - kap_m.kappa1.values)) < 1e-8
    assert np.max(np.abs(kap.kappa2.values - kap_m.kappa2.values)) < 1e-8


def test_moebius_identity_is_noop():
    curve = sphere_wiggle(128, 6)
    moved = moebius_apply(np.eye(4), curve)
    assert np.max(np.abs(moved.samples - curve.samples)) < 1e-14
