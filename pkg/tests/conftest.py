"""Shared fixtures: analytic test curves and a session calibration."""

import numpy as np
import pytest

from coneflow.cone_geometry import ConeCurve
from coneflow.correspondence import calibrate
from coneflow.periodic_calculus import PeriodicGrid, band_limited
from coneflow.sphere_geometry import SphereCurve


def circle_lift(n: int) -> ConeCurve:
    """u = (1/2, cos x, sin x, 1); the canonical on-cone circle."""
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    u = np.stack([0.5 * np.ones(n), np.cos(x), np.sin(x), np.ones(n)], axis=1)
    return ConeCurve(grid, u)


def perturbed_circle(n: int, seed: int, amplitude: float = 1e-2) -> ConeCurve:
    """Star-shaped band-limited wiggle of the circle, u3 = 1 chart."""
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    rng = np.random.default_rng(seed)
    u1 = (1.0 + amplitude) * np.cos(x) + band_limited(rng, n, 3, amplitude)
    u2 = (1.0 + amplitude) * np.sin(x) + band_limited(rng, n, 3, amplitude)
    u0 = 0.5 * (u1 ** 2 + u2 ** 2)
    return ConeCurve(grid, np.stack([u0, u1, u2, np.ones(n)], axis=1))


def lissajous_lift(n: int) -> ConeCurve:
    """Lift of the figure-eight (cos x, sin 2x)."""
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    u1, u2 = np.cos(x), np.sin(2 * x)
    u0 = 0.5 * (u1 ** 2 + u2 ** 2)
    return ConeCurve(grid, np.stack([u0, u1, u2, np.ones(n)], axis=1))


def sphere_circle(n: int) -> SphereCurve:
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    return SphereCurve(grid, np.stack([np.cos(x), np.sin(x)], axis=1))


def sphere_wiggle(n: int, seed: int, amplitude: float = 1e-2) -> SphereCurve:
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    rng = np.random.default_rng(seed)
    m1 = (1.0 + amplitude) * np.cos(x) + band_limited(rng, n, 3, amplitude)
    m2 = (1.0 + amplitude) * np.sin(x) + band_limited(rng, n, 3, amplitude)
    return SphereCurve(grid, np.stack([m1, m2], axis=1))


@pytest.fixture(scope="session")
def calibration():
    """One full sign calibration shared by every test that needs it."""
    return calibrate()
