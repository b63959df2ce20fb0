"""Spectral and finite-difference calculus on periodic grids."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coneflow.errors import GridMismatch
from coneflow.periodic_calculus import (Deriv, GridFunction, Identity, Mult,
                                        PeriodicGrid, Zero, adjoint_residual,
                                        antiderivative_eval, apply_operator,
                                        band_limited, derivative,
                                        fd4_derivative, integrate, quadrature,
                                        resample, spectral_derivative,
                                        trig_interp_eval)


def _grid(n=128, length=2 * np.pi):
    return PeriodicGrid(n, length)


def test_grid_nodes_and_spacing():
    g = _grid(16, 4.0)
    assert g.spacing == pytest.approx(0.25)
    assert np.allclose(g.nodes, 0.25 * np.arange(16))


def test_grid_rejects_tiny_or_odd():
    with pytest.raises(ValueError):
        PeriodicGrid(8, 1.0)
    with pytest.raises(ValueError):
        PeriodicGrid(33, 1.0)


@settings(max_examples=25, deadline=None)
@given(mode=st.integers(1, 20), order=st.integers(1, 3))
def test_spectral_derivative_exact_on_modes(mode, order):
    g = _grid(128)
    f = np.sin(mode * g.nodes)
    got = spectral_derivative(f, g.length, order)
    # d^j/dx^j sin(mx) cycles through m^j {cos, -sin, -cos, sin}
    phase = [np.sin, np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)]
    want = mode ** order * phase[order % 4](mode * g.nodes)
    assert np.max(np.abs(got - want)) < 1e-9 * mode ** order


def test_spectral_derivative_scales_with_length():
    g = _grid(64, 10.0)
    f = np.cos(2 * np.pi * g.nodes / g.length)
    got = spectral_derivative(f, g.length, 1)
    want = -(2 * np.pi / g.length) * np.sin(2 * np.pi * g.nodes / g.length)
    assert np.max(np.abs(got - want)) < 1e-12


def test_fd4_derivative_is_fourth_order():
    errs = []
    for n in (64, 128, 256):
        g = _grid(n)
        f = np.exp(np.sin(g.nodes))
        want = np.cos(g.nodes) * f
        errs.append(np.max(np.abs(fd4_derivative(f, g.length, 1) - want)))
    rate = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert min(rate) > 3.7


def test_quadrature_exact_on_trig():
    g = _grid(64)
    f = 2.0 + np.cos(3 * g.nodes)
    assert quadrature(f, g.length) == pytest.approx(4 * np.pi, abs=1e-12)


def test_integrate_gridfunction():
    g = _grid(64)
    f = GridFunction(g, np.ones(64))
    assert integrate(f) == pytest.approx(g.length)


def test_resample_band_limited_exact():
    g = _grid(32)
    f = GridFunction(g, np.sin(3 * g.nodes) + 0.2 * np.cos(5 * g.nodes))
    up = resample(f, 128)
    x = up.grid.nodes
    assert np.max(np.abs(up.values - np.sin(3 * x) - 0.2 * np.cos(5 * x))) < 1e-12


def test_trig_interp_eval_matches_nodes():
    g = _grid(32)
    vals = np.sin(2 * g.nodes)
    at = trig_interp_eval(vals, g.length, g.nodes[7:9])
    assert np.max(np.abs(at - vals[7:9])) < 1e-12


def test_antiderivative_eval():
    g = _grid(64)
    vals = np.cos(3 * g.nodes)  # zero mean, antiderivative sin(3x)/3
    got = antiderivative_eval(vals, g.length, g.nodes)
    got -= got[0]
    assert np.max(np.abs(got - np.sin(3 * g.nodes) / 3.0)) < 1e-12


def test_band_limited_deterministic_and_banded():
    got = band_limited(np.random.default_rng(4), 64, 3, 0.1)
    again = band_limited(np.random.default_rng(4), 64, 3, 0.1)
    assert np.array_equal(got, again)
    hat = np.fft.rfft(got)
    assert np.max(np.abs(hat[4:])) < 1e-12 * np.max(np.abs(hat))


def test_operator_algebra_matches_direct_computation():
    g = _grid(64)
    f = GridFunction(g, np.sin(g.nodes))
    w = GridFunction(g, 2.0 + np.cos(g.nodes))
    op = Mult(w) @ Deriv(1) + 3.0 * Identity()
    got = apply_operator(op, f)
    want = w.values * np.cos(g.nodes) + 3.0 * np.sin(g.nodes)
    assert np.max(np.abs(got.values - want)) < 1e-12


def test_zero_operator():
    g = _grid(32)
    f = GridFunction(g, np.sin(g.nodes))
    assert np.max(np.abs(apply_operator(Zero(), f).values)) == 0.0


def test_deriv_rejects_high_order():
    with pytest.raises(ValueError):
        Deriv(4)


@pytest.mark.parametrize("order", [1, 3])
def test_odd_derivatives_are_skew_adjoint(order):
    res = adjoint_residual(Deriv(order), trials=10, seed=1, grid=_grid(64))
    assert res < 1e-8


def test_even_derivative_is_not_skew():
    assert adjoint_residual(Deriv(2), trials=10, seed=1, grid=_grid(64)) > 0.1


def test_symmetrized_mult_deriv_is_skew():
    g = _grid(64)
    w = Mult(GridFunction(g, 1.0 + 0.5 * np.sin(g.nodes)))
    op = w @ Deriv(1) + Deriv(1) @ w
    assert adjoint_residual(op, trials=10, seed=2) < 1e-10


def test_operator_apply_rejects_foreign_grid():
    w = Mult(GridFunction(_grid(64), np.zeros(64)))
    f = GridFunction(_grid(32), np.ones(32))
    with pytest.raises(GridMismatch):
        w.apply(f)


def test_derivative_wrapper_methods_agree():
    g = _grid(256)
    f = GridFunction(g, np.exp(np.sin(g.nodes)))
    spec = derivative(f, 1, "spectral").values
    fd = derivative(f, 1, "fd4").values
    assert np.max(np.abs(spec - fd)) < 1e-6
