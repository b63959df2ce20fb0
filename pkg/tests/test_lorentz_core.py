"""Metric, group, and algebra helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coneflow.lorentz_core import (J, algebra_residual, apply_lorentz,
                                   cone_residual, compose_factors, exp_algebra,
                                   factor, lorentz_inverse, lorentz_residual,
                                   make_algebra, minkowski_inner,
                                   project_algebra, random_algebra,
                                   random_lorentz)

COORDS = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
VECTORS = st.tuples(COORDS, COORDS, COORDS, COORDS).map(np.array)


def test_metric_entries():
    want = np.zeros((4, 4))
    want[0, 3] = want[3, 0] = -1.0
    want[1, 1] = want[2, 2] = 1.0
    assert np.array_equal(J, want)


@given(u=VECTORS, v=VECTORS)
def test_inner_product_formula(u, v):
    want = -u[0] * v[3] - u[3] * v[0] + u[1] * v[1] + u[2] * v[2]
    assert minkowski_inner(u, v) == pytest.approx(want, rel=1e-12, abs=1e-9)


@given(u=VECTORS)
def test_cone_residual_is_raw_self_inner(u):
    assert cone_residual(u) == pytest.approx(abs(minkowski_inner(u, u)),
                                             rel=1e-12, abs=0.0)


def test_cone_residual_zero_on_cone():
    # u = ((a^2+b^2)/2, a, b, 1) satisfies <u,u> = 0 exactly in this chart
    u = np.array([0.5 * (0.09 + 0.16), 0.3, 0.4, 1.0])
    assert cone_residual(u) < 1e-16


@pytest.mark.parametrize("seed", range(8))
def test_random_lorentz_in_group(seed):
    theta = random_lorentz(seed, 0.7)
    assert lorentz_residual(theta) < 1e-12


@pytest.mark.parametrize("seed", range(8))
def test_inverse_via_metric_conjugation(seed):
    theta = random_lorentz(seed, 0.5)
    inv = lorentz_inverse(theta)
    assert np.max(np.abs(inv @ theta - np.eye(4))) < 1e-12
    assert np.max(np.abs(inv - J @ theta.T @ J)) < 1e-15


def test_random_lorentz_deterministic():
    assert np.array_equal(random_lorentz(42, 0.3), random_lorentz(42, 0.3))


def test_make_algebra_matches_block_layout():
    X = make_algebra(0.7, np.array([1.0, 2.0]), np.array([3.0, 4.0]), 5.0)
    want = np.array([
        [0.7, 3.0, 4.0, 0.0],
        [1.0, 0.0, 5.0, 3.0],
        [2.0, -5.0, 0.0, 4.0],
        [0.0, 1.0, 2.0, -0.7],
    ])
    assert np.array_equal(X, want)


def test_make_algebra_batched():
    a = np.array([0.1, 0.2])
    w = np.array([[1.0, 2.0], [3.0, 4.0]])
    z = np.array([[5.0, 6.0], [7.0, 8.0]])
    b = np.array([0.5, 0.6])
    X = make_algebra(a, w, z, b)
    assert X.shape == (2, 4, 4)
    assert np.array_equal(X[1], make_algebra(0.2, w[1], z[1], 0.6))


def test_algebra_elements_satisfy_metric_relation():
    # X in the algebra iff X^T J + J X = 0
    X = random_algebra(3, 1.0)
    assert np.max(np.abs(X.T @ J + J @ X)) < 1e-15
    assert algebra_residual(X) < 1e-15


def test_project_algebra_idempotent_and_fixes_shape():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(4, 4))
    P, defect = project_algebra(M)
    assert algebra_residual(P) < 1e-14
    assert defect > 0.1
    P2, defect2 = project_algebra(P)
    assert np.max(np.abs(P2 - P)) < 1e-14
    assert defect2 < 1e-14
    # projection leaves algebra elements alone
    X = random_algebra(5, 1.0)
    assert project_algebra(X)[1] < 1e-14


def test_exp_algebra_lands_in_group():
    for seed in range(5):
        theta = exp_algebra(random_algebra(seed, 0.8))
        assert lorentz_residual(theta) < 1e-12


def test_apply_lorentz_preserves_inner_products():
    theta = random_lorentz(9, 0.6)
    rng = np.random.default_rng(9)
    u = rng.normal(size=(7, 4))
    v = rng.normal(size=(7, 4))
    before = minkowski_inner(u, v)
    after = minkowski_inner(apply_lorentz(theta, u), apply_lorentz(theta, v))
    assert np.max(np.abs(after - before)) < 1e-12


def test_factor_round_trip():
    # elements near the identity factor as g1(eta) g0(beta, B) gm1(y)
    for seed in range(5):
        theta = random_lorentz(seed, 0.3)
        parts = factor(theta)
        assert np.max(np.abs(compose_factors(parts) - theta)) < 1e-10


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000))
def test_factor_reassembles_seeded_elements(seed):
    theta = random_lorentz(seed, 0.2)
    assert np.max(np.abs(compose_factors(factor(theta)) - theta)) < 1e-9
