"""Named property suites behind the `verify` command.

Each suite measures a list of checks (value vs tolerance, pass/fail)
plus records: measured facts that are reported without a pass verdict,
either because they document a convention (sign relations, operator
scalings, deliberately-wrong variants run once to show they fail) or
because no theorem is being asserted (monodromy eigenvalue drift).
Reports embed the tolerance table and the config hash so a stored
report pins the run that produced it.
"""
from __future__ import annotations

import time

import numpy as np

from . import correspondence as corr
from .cone_geometry import (ConeCurve, ConeInvariants, cone_frame,
                            cone_invariants, cone_invariants_closed_form,
                            normalization_residuals, reparametrize_arclength,
                            xi2_closed_form)
from .errors import ConeflowError
from .evolution_engine import (KdvStepper, build_K_from_invariants,
                               kdv_realization_rule, monodromy,
                               reconstruct_curve, run_realization_experiment,
                               solve_frame_ode, step_curve_flow)
from .hamiltonian_flows import (FlowCoefficients, arclength_r3,
                                gradient_consistency, h_functional,
                                induced_invariant_evolution, kdv_rhs,
                                make_P, make_P_general, make_Q0)
from .lorentz_core import (E4, apply_lorentz, cone_residual, lorentz_residual,
                           minkowski_inner, random_lorentz)
from .periodic_calculus import (Deriv, GridFunction, Mult, PeriodicGrid,
                                apply_operator, band_limited, quadrature,
                                spectral_derivative)
from .serialization import RunConfig
from .sphere_geometry import (FRAME_FROM_CLOSED_FORM, SphereCurve,
                              moebius_apply, sphere_invariants_closed_form,
                              sphere_invariants_from_frame)
from .tolerances import merged

SUITE_NAMES = ("frames", "correspondence", "operators", "realization")


def _check(name: str, value: float, tol: float) -> dict:
    value = float(value)
    return {"name": name, "value": value, "tol": float(tol),
            "pass": bool(np.isfinite(value) and value <= tol)}


def _record(name: str, value, note: str) -> dict:
    if isinstance(value, (int, float, np.floating)):
        value = float(value)
    return {"name": name, "value": value, "note": note}


def _perturbed_circle(n: int, seed: int, amplitude: float = 1e-2) -> ConeCurve:
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    eps = band_limited(np.random.default_rng(seed), n, n_modes=3,
                       amplitude=amplitude)
    u1 = (1 + eps) * np.cos(x)
    u2 = (1 + eps) * np.sin(x)
    vals = np.stack([0.5 * (u1 ** 2 + u2 ** 2), u1, u2, np.ones(n)], axis=1)
    return ConeCurve(grid, vals)


def _circle_lift(n: int) -> ConeCurve:
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    vals = np.stack([0.5 * np.ones(n), np.cos(x), np.sin(x), np.ones(n)],
                    axis=1)
    return ConeCurve(grid, vals)


def _lissajous_lift(n: int) -> ConeCurve:
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    u1, u2 = np.cos(x), np.sin(2 * x)
    vals = np.stack([0.5 * (u1 ** 2 + u2 ** 2), u1, u2, np.ones(n)], axis=1)
    return ConeCurve(grid, vals)


def _frame_group_residual(curve: ConeCurve) -> float:
    rho = cone_frame(curve).rho
    return max(lorentz_residual(rho[i]) for i in range(rho.shape[0]))


def suite_frames(n: int = 256, seed: int = 0, tolerances=None) -> tuple:
    tol = merged(tolerances)
    checks, records = [], []

    curves = {
        "circle": _circle_lift(n),
        "perturbed-circle": _perturbed_circle(n, seed),
        "figure-eight": _lissajous_lift(n),
    }
    for name, curve in curves.items():
        checks.append(_check(f"frame-group-residual/{name}",
                             _frame_group_residual(curve), tol["tol_group"]))
        res = normalization_residuals(curve, cone_frame(curve))
        worst = max(v for k, v in res.items() if k != "worst_node")
        checks.append(_check(f"frame-normalization/{name}", worst,
                             tol["tol_norm"]))

    circle = curves["circle"]
    inv = cone_invariants_closed_form(circle)
    dev = max(np.max(np.abs(inv.k0.values - 1.0)),
              np.max(np.abs(inv.k1.values + 0.5)),
              np.max(np.abs(inv.k2.values)))
    checks.append(_check("circle-invariants-closed-form", dev, 1e-8))
    inv_fr = cone_invariants(circle)
    dev = max(np.max(np.abs(inv_fr.k0.values - 1.0)),
              np.max(np.abs(inv_fr.k1.values + 0.5)),
              np.max(np.abs(inv_fr.k2.values)))
    checks.append(_check("circle-invariants-frame", dev, 1e-8))

    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes
    m_circle = SphereCurve(grid, np.stack([np.cos(x), np.sin(x)], axis=1))
    kap = sphere_invariants_closed_form(m_circle)
    dev = max(np.max(np.abs(kap.kappa1.values - 0.5)),
              np.max(np.abs(kap.kappa2.values)))
    checks.append(_check("sphere-circle-invariants", dev, 1e-8))

    pc = curves["perturbed-circle"]
    base = cone_invariants_closed_form(pc)
    worst = 0.0
    for trial in range(10):
        theta = random_lorentz(1000 + trial, 0.3)
        moved = ConeCurve(pc.grid, apply_lorentz(theta, pc.samples))
        got = cone_invariants_closed_form(moved)
        worst = max(worst,
                    np.max(np.abs(got.k0.values - base.k0.values)),
                    np.max(np.abs(got.k1.values - base.k1.values)),
                    np.max(np.abs(got.k2.values - base.k2.values)))
    checks.append(_check("lorentz-equivariance-10-seeds", worst, 1e-8))

    m_base = corr.project(pc)
    kap_base = sphere_invariants_closed_form(m_base)
    worst = 0.0
    for trial in range(10):
        theta = random_lorentz(2000 + trial, 0.25)
        moved = moebius_apply(theta, m_base)
        got = sphere_invariants_closed_form(moved)
        worst = max(worst,
                    np.max(np.abs(got.kappa1.values - kap_base.kappa1.values)),
                    np.max(np.abs(got.kappa2.values - kap_base.kappa2.values)))
    checks.append(_check("moebius-equivariance-10-seeds", worst, 1e-8))

    # Records: convention facts measured, not judged.
    factors = cone_frame(pc).factors
    xi2_formula = xi2_closed_form(pc)
    records.append(_record(
        "xi2-formula-vs-enforced",
        float(np.max(np.abs(factors.xi[:, 1] - xi2_formula))),
        "second xi component: displayed determinant formula against the "
        "value the normalization equations enforce"))

    inv_cf = cone_invariants_closed_form(pc)
    inv_fr = cone_invariants(pc)
    records.append(_record(
        "cone-closed-form-vs-frame",
        float(max(np.max(np.abs(inv_cf.k1.values - inv_fr.k1.values)),
                  np.max(np.abs(inv_cf.k2.values - inv_fr.k2.values)))),
        "the two k readers agree componentwise with no sign flip"))

    kap_cf = sphere_invariants_closed_form(m_base)
    kap_fr = sphere_invariants_from_frame(m_base)
    f1, f2 = FRAME_FROM_CLOSED_FORM
    records.append(_record(
        "sphere-frame-vs-closed-form-signs",
        [f1, f2,
         float(np.max(np.abs(kap_fr.kappa1.values - f1 * kap_cf.kappa1.values))),
         float(np.max(np.abs(kap_fr.kappa2.values - f2 * kap_cf.kappa2.values)))],
        "raw w-column kappa read equals (sign1, sign2) times the closed "
        "form; [sign1, sign2, dev1, dev2]"))

    # k1 with one lower power of speed in the denominator: shown wrong once.
    up = spectral_derivative(pc.samples, pc.grid.length, 1)
    upp = spectral_derivative(pc.samples, pc.grid.length, 2)
    k0 = np.sqrt(minkowski_inner(up, up))
    num = (minkowski_inner(up, upp) ** 2
           - minkowski_inner(upp, upp) * k0 ** 2)
    k1_low = num / (2.0 * k0 ** 4)
    records.append(_record(
        "k1-denominator-variant",
        float(np.max(np.abs(k1_low - inv_cf.k1.values))),
        "|k1 with 2 k0^4 denominator - adopted 2 k0^5 form| on the "
        "perturbed circle; the variant breaks the circle oracle"))
    return checks, records


def suite_correspondence(n: int = 256, seed: int = 0, tolerances=None,
                         calibration=None) -> tuple:
    tol = merged(tolerances)
    checks, records = [], []
    grid = PeriodicGrid(n, 2 * np.pi)
    x = grid.nodes

    pc = _perturbed_circle(n, seed)
    m = corr.project(pc)
    back = corr.project(ConeCurve(grid, 3.7 * pc.samples))
    checks.append(_check("projection-scale-invariance",
                         np.max(np.abs(back.samples - m.samples)), 1e-12))

    lifted = corr.lift_arclength(m)
    lp = spectral_derivative(lifted.samples, lifted.grid.length, 1)
    checks.append(_check("lift-unit-speed",
                         np.max(np.abs(minkowski_inner(lp, lp) - 1.0)), 1e-10))
    again = corr.project(lifted)
    checks.append(_check("project-after-lift",
                         np.max(np.abs(again.samples - m.samples)), 1e-10))

    ua = reparametrize_arclength(pc)
    relift = corr.lift_arclength(corr.project(ua))
    checks.append(_check("lift-after-project-arclength",
                         np.max(np.abs(relift.samples - ua.samples)), 1e-8))

    if calibration is None:
        calibration = corr.calibrate(tol=1e-4)
    report = corr.match_invariants(m, calibration)
    checks.append(_check("correspondence-deviation", report["max_dev"], 1e-6))

    theta = random_lorentz(31, 0.25)
    moved = moebius_apply(theta, m)
    report_moved = corr.match_invariants(moved, calibration)
    checks.append(_check("correspondence-after-moebius",
                         report_moved["max_dev"], 1e-6))

    fresh = corr.calibrate(n_values=(128, 256), tol=1e-4)
    stale = (fresh.sigma_cone != calibration.sigma_cone
             or fresh.sigma_corr != calibration.sigma_corr)
    checks.append(_check("calibration-freshness", float(stale), 0.5))
    checks.append(_check("calibration-max-dev", calibration.max_dev, 1e-4))
    records.append(_record(
        "calibration-signs",
        [*calibration.sigma_cone, *calibration.sigma_corr],
        "[sigma_cone, sigma_corr]: closed-form-vs-frame on the cone and "
        "cone-vs-sphere frame reads"))

    raw = corr.match_invariants(m, calibration, n_over=1)
    records.append(_record(
        "correspondence-same-grid-deviation", raw["max_dev"],
        "deviation with no refinement of the comparison grid (the default "
        "evaluates both pipelines on a floor of 512 nodes)"))
    return checks, records


def _poly_functional(coeffs):
    c0, c1, c2, c3, c4, c5, c6 = coeffs

    def grad(a, b):
        return np.stack([3 * c0 * a ** 2 + 2 * c1 * a * b + c2 * b ** 2
                         + 2 * c4 * a + c5 * b,
                         c1 * a ** 2 + 2 * c2 * a * b + 3 * c3 * b ** 2
                         + c5 * a + 2 * c6 * b])

    def hess(a, b):
        h11 = 6 * c0 * a + 2 * c1 * b + 2 * c4
        h12 = 2 * c1 * a + 2 * c2 * b + c5
        h22 = 2 * c2 * a + 6 * c3 * b + 2 * c6
        return h11, h12, h22

    return grad, hess


def _jacobi_defect(n: int = 64, seed: int = 7) -> float:
    """Brute-force Jacobi identity for the constant-coefficient tensor.

    The tensor is the unit-speed restriction diag(-D, D) acting on
    gradients of functionals int phi(k1, k2) dx with cubic phi. The
    gradient of a bracket {F, G} is Hess_F (T grad G) - Hess_G (T grad F),
    so the cyclic sum of double brackets is computable exactly on the
    grid and must vanish.
    """
    grid = PeriodicGrid(n, 2 * np.pi)
    rng = np.random.default_rng(seed)
    a = band_limited(rng, n, n_modes=4, amplitude=1.0)
    b = band_limited(rng, n, n_modes=4, amplitude=1.0)
    L = grid.length

    def T(pair):
        return np.stack([-spectral_derivative(pair[0], L, 1),
                         spectral_derivative(pair[1], L, 1)])

    functionals = [_poly_functional(rng.uniform(-1, 1, 7)) for _ in range(3)]

    def double_bracket(i, j, k):
        gi, hi = functionals[i]
        gj, hj = functionals[j]
        gk, hk = functionals[k]
        tgj = T(gj(a, b))
        tgi = T(gi(a, b))
        h11i, h12i, h22i = hi(a, b)
        h11j, h12j, h22j = hj(a, b)
        grad_br = np.stack([h11i * tgj[0] + h12i * tgj[1]
                            - h11j * tgi[0] - h12j * tgi[1],
                            h12i * tgj[0] + h22i * tgj[1]
                            - h12j * tgi[0] - h22j * tgi[1]])
        return quadrature((grad_br * T(gk(a, b))).sum(axis=0), L)

    total = (double_bracket(0, 1, 2) + double_bracket(1, 2, 0)
             + double_bracket(2, 0, 1))
    return abs(total)


def suite_operators(n: int = 128, seed: int = 0, tolerances=None) -> tuple:
    checks, records = [], []
    grid = PeriodicGrid(n, 2 * np.pi)
    rng = np.random.default_rng(seed)
    # Moderate amplitudes and mode counts: the identities are exact, so
    # the measured defect is pure roundoff ~ amplitude^2 xi_max^3 eps.
    k1 = GridFunction(grid, band_limited(rng, n, n_modes=5, amplitude=0.5))
    k2 = GridFunction(grid, band_limited(rng, n, n_modes=5, amplitude=0.5))
    k = ConeInvariants(GridFunction(grid, np.ones(n)), k1, k2)

    P = make_P(k1, k2)
    checks.append(_check("P-skew-adjoint", P.adjoint_residual(seed=seed + 1),
                         1e-10))

    r = FlowCoefficients.cone(k1, k2, arclength_r3(k1, k.k0))
    kev = induced_invariant_evolution(k, r)
    Pk = P.apply((k1, k2))
    dev = max(np.max(np.abs(kev[1].values - Pk[0].values)),
              np.max(np.abs(kev[2].values - Pk[1].values)))
    checks.append(_check("invariant-evolution-matches-P", dev, 1e-12))
    checks.append(_check("k0-preserved-by-arclength-rule",
                         np.max(np.abs(kev[0].values)), 1e-12))

    g1, g2 = h_functional().gradient(k)
    Pg = P.apply((g1, g2))
    f1, f2 = kdv_rhs(k1, k2)
    dev = max(np.max(np.abs(Pg[0].values - f1.values)),
              np.max(np.abs(Pg[1].values - f2.values)))
    checks.append(_check("P-gradient-gives-kdv", dev, 1e-12))

    checks.append(_check("gradient-consistency",
                         gradient_consistency(h_functional(), k,
                                              seed=seed + 2), 1e-6))

    Q0 = make_Q0(k.k0)
    w1 = band_limited(rng, n, n_modes=6, amplitude=1.0)
    w2 = band_limited(rng, n, n_modes=6, amplitude=1.0)
    got = Q0.apply((GridFunction(grid, np.zeros(n)),
                    GridFunction(grid, w1), GridFunction(grid, w2)))
    want1 = -spectral_derivative(w1, grid.length, 1)
    want2 = spectral_derivative(w2, grid.length, 1)
    dev = max(np.max(np.abs(got[1].values - want1)),
              np.max(np.abs(got[2].values - want2)))
    checks.append(_check("Q0-unit-speed-restriction", dev, 1e-13))
    checks.append(_check("Q0-skew-adjoint", Q0.adjoint_residual(seed=seed + 3),
                         1e-10))

    checks.append(_check("constant-coefficient-jacobi", _jacobi_defect(),
                         1e-9))

    k0_gen = GridFunction(grid, 1.0 + 0.3 * np.cos(grid.nodes))
    kg = ConeInvariants(k0_gen, k1, k2)
    Pgen = make_P_general(kg)
    h1 = GridFunction(grid, band_limited(rng, n, n_modes=5, amplitude=1.0))
    r3 = GridFunction(grid, -spectral_derivative(h1.values, grid.length, 1)
                      / k0_gen.values)
    rg = FlowCoefficients.cone(h1, GridFunction(grid, np.zeros(n)), r3)
    kevg = induced_invariant_evolution(kg, rg)
    got = Pgen.apply((GridFunction(grid, np.zeros(n)), h1,
                      GridFunction(grid, np.zeros(n))))
    checks.append(_check("general-speed-P-matches-evolution",
                         np.max(np.abs(kevg[1].values - got[1].values)),
                         1e-10))
    checks.append(_check("general-speed-P-casimir-row",
                         np.max(np.abs(got[0].values)), 1e-14))

    # Records.
    const2 = ConeInvariants(GridFunction(grid, 2.0 * np.ones(n)), k1, k2)
    P2 = make_P_general(const2)
    probe = GridFunction(grid, band_limited(rng, n, n_modes=5, amplitude=1.0))
    got2 = P2.apply((GridFunction(grid, np.zeros(n)), probe,
                     GridFunction(grid, np.zeros(n))))
    d3 = spectral_derivative(probe.values, grid.length, 3)
    half_k1 = Mult(GridFunction(grid, k1.values / 2.0))
    lin = apply_operator(Deriv() @ half_k1 + half_k1 @ Deriv(), probe)
    records.append(_record(
        "P-general-constant-speed-scaling",
        float(np.max(np.abs(got2[1].values - (-0.25 * d3 + lin.values)))),
        "at k0 = 2 the triple-derivative term scales by 1/4 (two 1/k0 "
        "factors between the derivatives); the 1/8 three-factor variant "
        "is what the next record measures"))

    inv = GridFunction(grid, 1.0 / k0_gen.values)
    D = Deriv()
    triple3 = D @ Mult(inv) @ D @ Mult(inv) @ D @ Mult(inv)
    kk = GridFunction(grid, k1.values / k0_gen.values)
    alt_entry = (-1.0) * triple3 + D @ Mult(kk) + Mult(kk) @ D
    got_alt = apply_operator(alt_entry, h1)
    records.append(_record(
        "P-general-three-factor-variant-mismatch",
        float(np.max(np.abs(kevg[1].values - got_alt.values))),
        "appending a third 1/k0 factor after the last derivative misses "
        "the measured invariant evolution by this much"))
    return checks, records


def suite_realization(n: int = 128, seed: int = 0, t_end: float = 0.02,
                      tolerances=None, calibration=None) -> tuple:
    checks, records = [], []
    if calibration is None:
        calibration = corr.calibrate(tol=1e-4)

    pc = _perturbed_circle(n, seed)
    rep = run_realization_experiment(pc, t_end=t_end, dt_kdv=1e-4,
                                     n_out=3, calibration=calibration)
    checks.append(_check("k0-preservation", rep["k0_drift"], 1e-7))
    checks.append(_check("curve-flow-vs-pde", rep["realization_vs_pde_rel_l2"],
                         1e-4))
    checks.append(_check("projection-vs-sphere-flow",
                         rep["projection_vs_sphere_max"], 1e-4))
    checks.append(_check("monodromy-eigenvalue-drift",
                         rep["monodromy_eigenvalue_drift"], 1e-6))
    records.append(_record(
        "monodromy-eigenvalue-drift", rep["monodromy_eigenvalue_drift"],
        "isospectrality along the flow is measured and reported only; no "
        "theorem is asserted"))

    # Soliton shape preservation for the decoupled real equation.
    L, ns = 40.0, 512
    sg = PeriodicGrid(ns, L)
    xs = sg.nodes
    sol0 = -4.0 / np.cosh(xs - L / 2) ** 2
    stepper = KdvStepper(sg, 5e-4)
    a, b = sol0.copy(), np.zeros(ns)
    for _ in range(2000):
        a, b = stepper.step_values(a, b)
    want = -4.0 / np.cosh(xs - L / 2 - 4.0) ** 2
    checks.append(_check("soliton-shape-t1", np.max(np.abs(a - want)), 1e-6))
    checks.append(_check("soliton-mass-conservation",
                         abs(quadrature(a, L) - quadrature(sol0, L)), 1e-8))
    h0 = 0.5 * quadrature(sol0 ** 2, L)
    checks.append(_check("soliton-energy-conservation",
                         abs(0.5 * quadrature(a ** 2 + b ** 2, L) - h0), 1e-8))
    records.append(_record(
        "k2-integral-drift",
        float(abs(quadrature(b, L))),
        "the second component starts at zero and its mean stays there"))

    # Reconstruction round trip on closed-curve invariants.
    ua = reparametrize_arclength(_perturbed_circle(n, seed + 1))
    inv = cone_invariants_closed_form(ua)
    rec = reconstruct_curve(inv)
    checks.append(_check("reconstruction-on-cone",
                         float(np.max(cone_residual(rec.curve.samples))),
                         1e-8))
    inv_back = cone_invariants_closed_form(rec.curve)
    dev = max(np.max(np.abs(inv_back.k0.values - inv.k0.values)),
              np.max(np.abs(inv_back.k1.values - inv.k1.values)),
              np.max(np.abs(inv_back.k2.values - inv.k2.values)))
    checks.append(_check("reconstruction-round-trip", dev, 1e-6))
    mono = monodromy(rec)
    checks.append(_check("monodromy-group-residual", mono.group_residual(),
                         1e-10))

    # The +k1' radial variant, run once to show it breaks k0.
    small = reparametrize_arclength(_perturbed_circle(64, seed))

    def wrong_rule(kk):
        r3 = GridFunction(kk.grid, -arclength_r3(kk.k1, kk.k0).values)
        return FlowCoefficients.cone(kk.k1, kk.k2, r3)

    dt = 0.9 * 0.05 * small.grid.spacing ** 3
    good = bad = small
    for _ in range(40):
        good = step_curve_flow(good, kdv_realization_rule, dt)
        bad = step_curve_flow(bad, wrong_rule, dt)
    k0_good = np.max(np.abs(
        cone_invariants_closed_form(good).k0.values - 1.0))
    k0_bad = np.max(np.abs(cone_invariants_closed_form(bad).k0.values - 1.0))
    records.append(_record(
        "radial-sign-variant-k0-drift", [float(k0_good), float(k0_bad)],
        "[adopted -k1', literal +k1'] k0 drift after 40 identical steps; "
        "the + sign visibly destroys arc-length preservation"))

    # The opposite frame ODE convention, run once to show it fails.
    # Variable K is essential here: for a circle K is constant, the two
    # path-ordered exponentials are transposes of each other, and both
    # conventions reconstruct the same curve.
    inv_c = cone_invariants_closed_form(small)
    K = build_K_from_invariants(inv_c)
    Kt = type(K)(grid=K.grid, K=np.swapaxes(K.K, 1, 2).copy())
    sol_alt = solve_frame_ode(Kt, np.eye(4))
    u_alt = np.einsum("nij,j->ni", np.swapaxes(sol_alt.rho, 1, 2), E4)
    u_adopted = reconstruct_curve(inv_c, np.eye(4)).curve.samples
    try:
        k1_dev = float(np.max(np.abs(
            cone_invariants_closed_form(
                ConeCurve(K.grid, u_alt)).k1.values - inv_c.k1.values)))
    except ConeflowError as exc:
        k1_dev = float("inf")
        records.append(_record("frame-ode-left-convention-error",
                               type(exc).__name__, str(exc)))
    point_dev = float(np.max(np.abs(u_alt - u_adopted)))
    records.append(_record(
        "frame-ode-left-convention-deviation", [point_dev, k1_dev],
        "[pointwise curve, k1 read] deviation when integrating "
        "rho_x = rho K with u = rho e4 instead of the adopted "
        "rho_x = K rho, u = rho^{-1} e4, on a perturbed circle: the "
        "curves differ at O(1); the invariant reads differ only at "
        "higher order in the perturbation amplitude"))
    return checks, records


def run_suite(suite: str, config: RunConfig | None = None,
              calibration=None) -> dict:
    """Run one named suite (or `all`) and assemble the JSON-ready report."""
    if config is None:
        config = RunConfig()
    if suite != "all" and suite not in SUITE_NAMES:
        raise ValueError(f"unknown suite {suite!r}; "
                         f"choose from {('all',) + SUITE_NAMES}")
    names = SUITE_NAMES if suite == "all" else (suite,)
    tol = merged(config.tolerances)
    checks, records = [], []
    start = time.perf_counter()
    for name in names:
        if name == "frames":
            c, r = suite_frames(config.n_points, config.seed,
                                config.tolerances)
        elif name == "correspondence":
            c, r = suite_correspondence(config.n_points, config.seed,
                                        config.tolerances, calibration)
        elif name == "operators":
            c, r = suite_operators(min(config.n_points, 128), config.seed,
                                   config.tolerances)
        else:
            c, r = suite_realization(min(config.n_points, 128), config.seed,
                                     tolerances=config.tolerances,
                                     calibration=calibration)
        prefix = name + "/"
        checks.extend({**chk, "name": prefix + chk["name"]} for chk in c)
        records.extend({**rec, "name": prefix + rec["name"]} for rec in r)
    wall = time.perf_counter() - start
    return {
        "suite": suite,
        "n_points": config.n_points,
        "seed": config.seed,
        "tolerances": tol,
        "config_hash": config.hash(),
        "checks": checks,
        "records": records,
        "passed": all(c["pass"] for c in checks),
        "wall_time_s": round(wall, 3),
    }
