"""Time stepping, reconstruction, monodromy, and the realization experiment."""

import numpy as np
import pytest

from conftest import circle_lift, perturbed_circle, sphere_wiggle
from coneflow.cone_geometry import (ConeCurve, ConeInvariants,
                                    cone_invariants_closed_form,
                                    reparametrize_arclength)
from coneflow.errors import (BlowupDetected, CalibrationMissing,
                             StabilityGuard)
from coneflow.evolution_engine import (KdvStepper, RK4_GUARD_C,
                                       build_K_from_invariants,
                                       kdv_realization_rule, monodromy,
                                       reconstruct_curve,
                                       run_realization_experiment,
                                       solve_frame_ode, step_curve_flow,
                                       step_kdv, step_sphere_flow)
from coneflow.hamiltonian_flows import hamiltonian_h
from coneflow.lorentz_core import cone_residual, lorentz_residual
from coneflow.periodic_calculus import (GridFunction, PeriodicGrid,
                                        quadrature)
from coneflow.sphere_geometry import sphere_invariants_from_frame


def _unit_invariants(n, L, k1_values, k2_values=None):
    grid = PeriodicGrid(n, L)
    if k2_values is None:
        k2_values = np.zeros(n)
    return ConeInvariants(GridFunction(grid, np.ones(n)),
                          GridFunction(grid, k1_values),
                          GridFunction(grid, k2_values))


def test_kdv_zero_data_is_stationary():
    k = _unit_invariants(64, 2 * np.pi, np.zeros(64))
    out = step_kdv(k, 1e-3)
    assert np.max(np.abs(out.k1.values)) == 0.0
    assert np.max(np.abs(out.k2.values)) == 0.0


def test_kdv_linear_regime_matches_airy_dispersion():
    # at tiny amplitude the system is k_t = -/+ k''', solved exactly by the
    # integrating factor; a single mode just rotates in phase
    n, L = 128, 2 * np.pi
    grid = PeriodicGrid(n, L)
    x = grid.nodes
    amp = 1e-9
    k = _unit_invariants(n, L, amp * np.cos(3 * x), amp * np.sin(5 * x))
    stepper = KdvStepper(grid, 1e-4)
    state = k
    for _ in range(100):
        state = stepper.step(state)
    t = 1e-2
    # k1_t = -k1''' -> mode m advects with phase +m^3 t
    want1 = amp * np.cos(3 * (x + 9 * t))
    want2 = amp * np.sin(5 * (x + 25 * t))
    assert np.max(np.abs(state.k1.values - want1)) < 1e-6 * amp
    assert np.max(np.abs(state.k2.values - want2)) < 1e-6 * amp


def test_kdv_soliton_short_run_conserves_mass_and_h():
    n, L = 256, 40.0
    grid = PeriodicGrid(n, L)
    x = grid.nodes
    k = _unit_invariants(n, L, -4.0 / np.cosh(x - L / 2) ** 2)
    stepper = KdvStepper(grid, 5e-4)
    state = k
    for _ in range(200):
        state = stepper.step(state)
    mass0 = quadrature(k.k1.values, L)
    mass1 = quadrature(state.k1.values, L)
    assert abs(mass1 - mass0) < 1e-10
    assert abs(hamiltonian_h(state) - hamiltonian_h(k)) < 1e-8
    # and it traveled: the peak moved right by ~4 * t
    t = 200 * 5e-4
    want = -4.0 / np.cosh(x - L / 2 - 4 * t) ** 2
    assert np.max(np.abs(state.k1.values - want)) < 1e-6


def test_kdv_rk4_scheme_guard():
    grid = PeriodicGrid(256, 2 * np.pi)
    with pytest.raises(StabilityGuard):
        KdvStepper(grid, 1e-2, scheme="rk4")


def test_kdv_blowup_guard():
    n, L = 64, 2 * np.pi
    grid = PeriodicGrid(n, L)
    k = _unit_invariants(n, L, 80.0 * np.cos(grid.nodes))
    stepper = KdvStepper(grid, 5e-2)
    with pytest.raises(BlowupDetected):
        state = k
        for _ in range(50):
            state = stepper.step(state)


def test_curve_flow_guard_and_cone_preservation():
    curve = reparametrize_arclength(perturbed_circle(64, 0))
    dx = curve.grid.spacing
    with pytest.raises(StabilityGuard):
        step_curve_flow(curve, kdv_realization_rule, 10 * RK4_GUARD_C * dx ** 3)
    dt = 0.5 * RK4_GUARD_C * dx ** 3
    state = curve
    for _ in range(20):
        state = step_curve_flow(state, kdv_realization_rule, dt)
    assert np.max(cone_residual(state.samples)) < 1e-12
    k = cone_invariants_closed_form(state)
    assert np.max(np.abs(k.k0.values - 1.0)) < 1e-10


def test_sphere_flow_smoke(calibration):
    m = sphere_wiggle(64, 1)
    s1, s2 = calibration.sigma_corr

    def rule(curve):
        kap = sphere_invariants_from_frame(curve)
        return __import__("coneflow.hamiltonian_flows", fromlist=["FlowCoefficients"]).FlowCoefficients.sphere(
            GridFunction(curve.grid, s1 * kap.kappa1.values),
            GridFunction(curve.grid, s2 * kap.kappa2.values))

    dt = 0.5 * RK4_GUARD_C * m.grid.spacing ** 3
    state = m
    for _ in range(10):
        state = step_sphere_flow(state, rule, dt)
    assert np.all(np.isfinite(state.samples))


def test_solve_frame_ode_on_circle():
    k = cone_invariants_closed_form(circle_lift(128))
    sol = solve_frame_ode(build_K_from_invariants(k), np.eye(4))
    assert max(lorentz_residual(r) for r in sol.rho) < 1e-10
    mono = monodromy(sol)
    assert mono.group_residual() < 1e-10
    # the circle closes: monodromy is the identity
    assert np.max(np.abs(mono.matrix - np.eye(4))) < 1e-9


def test_reconstruction_round_trip():
    curve = reparametrize_arclength(perturbed_circle(128, 2))
    k = cone_invariants_closed_form(curve)
    sol = reconstruct_curve(k)
    assert np.max(cone_residual(sol.curve.samples)) < 1e-8
    back = cone_invariants_closed_form(sol.curve)
    for name in ("k0", "k1", "k2"):
        dev = np.max(np.abs(getattr(back, name).values
                            - getattr(k, name).values))
        assert dev < 1e-6, name


def test_reconstruction_initial_frame_moves_curve_rigidly():
    from coneflow.lorentz_core import apply_lorentz, random_lorentz
    curve = reparametrize_arclength(perturbed_circle(128, 3))
    k = cone_invariants_closed_form(curve)
    rho0 = random_lorentz(11, 0.4)
    a = reconstruct_curve(k).curve.samples
    b = reconstruct_curve(k, rho0).curve.samples
    # same curve up to the global motion rho0^{-1} acting on the left
    from coneflow.lorentz_core import lorentz_inverse
    moved = apply_lorentz(lorentz_inverse(rho0), a)
    assert np.max(np.abs(b - moved)) < 1e-9


def test_monodromy_eigenvalues_on_unit_circle_structure():
    # O(3,1) monodromy: eigenvalues come in (lam, 1/lam) pairs, det = 1
    curve = reparametrize_arclength(perturbed_circle(128, 4))
    mono = monodromy(reconstruct_curve(cone_invariants_closed_form(curve)))
    lam = np.sort_complex(mono.eigenvalues)
    prod = np.prod(lam)
    assert abs(prod - 1.0) < 1e-8


def test_realization_experiment_report(calibration):
    report = run_realization_experiment(perturbed_circle(64, 7),
                                        t_end=2e-3, dt_kdv=1e-4, n_out=3,
                                        calibration=calibration)
    assert report["k0_drift"] < 1e-9
    assert report["realization_vs_pde_rel_l2"] < 1e-6
    assert report["projection_vs_sphere_max"] < 1e-8
    assert report["monodromy_eigenvalue_drift"] < 1e-8
    assert report["hamiltonian_drift"] < 1e-10
    traj = report["trajectories"]
    assert len(traj["curve"].states) == 3
    assert traj["pde"].times == traj["curve"].times


def test_realization_experiment_requires_calibration():
    with pytest.raises(CalibrationMissing):
        run_realization_experiment(perturbed_circle(64, 7), t_end=1e-3)
