"""Batch front end: invariants, flows, reconstruction, calibration, verify.

Exit codes are frozen: 0 success, 1 verification failure, 2 schema
violation, 3 geometric precondition, 4 stability/blowup guard,
5 calibration. Every command is deterministic given its flags and seed,
writes output files atomically, and embeds the hash of its effective
run configuration in JSON reports. TOOLKIT_THREADS caps the linear
algebra thread pools (set before the numerical core is imported).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .errors import ConeflowError, SchemaViolation

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _apply_thread_cap() -> None:
    cap = os.environ.get("TOOLKIT_THREADS")
    if not cap:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise SchemaViolation(f"TOOLKIT_THREADS must be a positive integer, "
                              f"got {cap!r}")
    for var in _THREAD_VARS:
        os.environ.setdefault(var, cap)


def _parse_tol(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SchemaViolation(f"--tol expects KEY=VALUE, got {pair!r}")
        key, _, val = pair.partition("=")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise SchemaViolation(f"--tol {key}: {val!r} is not a number")
    return out


def _build_config(args) -> "RunConfig":
    from .serialization import RunConfig

    raw = {}
    for flag, field in (("n", "n_points"), ("length", "length"),
                        ("diff", "diff_method"), ("scheme", "scheme"),
                        ("dt", "dt"), ("t_end", "t_end"), ("seed", "seed"),
                        ("calibration", "calibration")):
        value = getattr(args, flag, None)
        if value is not None:
            raw[field] = value
    tol = _parse_tol(getattr(args, "tol", None))
    if tol:
        from .tolerances import merged
        try:
            merged(tol)
        except KeyError as exc:
            raise SchemaViolation(f"--tol: {exc.args[0]}")
        raw["tolerances"] = tol
    return RunConfig.from_dict(raw)


def _load_calibration(path):
    from .correspondence import SignCalibration

    return SignCalibration.load(path) if path else None


def _sidecar(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + "_report.json"


def cmd_invariants(args) -> int:
    import numpy as np

    from . import serialization as se
    from .lorentz_core import cone_residual

    config = _build_config(args)
    tol = config.tolerances
    report = {"input": args.input, "space": args.space,
              "config_hash": config.hash()}

    if args.space == "cone":
        from .cone_geometry import (cone_frame, cone_invariants,
                                    cone_invariants_closed_form,
                                    normalization_residuals,
                                    validate_cone_curve)

        curve = se.read_cone_curve_csv(args.input)
        validate_cone_curve(curve, **{k: v for k, v in tol.items()
                                      if k in ("tol_cone",)})
        inv = cone_invariants_closed_form(curve, method=config.diff_method)
        frames = cone_frame(curve, method=config.diff_method)
        inv_frame = cone_invariants(curve, method=config.diff_method)
        dev = max(float(np.max(np.abs(inv.k0.values - inv_frame.k0.values))),
                  float(np.max(np.abs(inv.k1.values - inv_frame.k1.values))),
                  float(np.max(np.abs(inv.k2.values - inv_frame.k2.values))))
        se.write_cone_invariants_csv(args.output, inv)
        report["cone_residual_max"] = float(np.max(cone_residual(curve.samples)))
        report["frame_residual_maxima"] = {
            k: v for k, v in normalization_residuals(curve, frames).items()}
        report["closed_form_vs_frame"] = dev
    else:
        from .sphere_geometry import (sphere_frame, FRAME_FROM_CLOSED_FORM,
                                      sphere_invariants_closed_form,
                                      sphere_invariants_from_frame,
                                      sphere_normalization_residuals,
                                      validate_sphere_curve)

        curve = se.read_sphere_curve_csv(args.input)
        validate_sphere_curve(curve, method=config.diff_method)
        inv = sphere_invariants_closed_form(curve, method=config.diff_method)
        frames = sphere_frame(curve, method=config.diff_method)
        inv_frame = sphere_invariants_from_frame(curve,
                                                 method=config.diff_method)
        f1, f2 = FRAME_FROM_CLOSED_FORM
        dev = max(float(np.max(np.abs(f1 * inv.kappa1.values
                                      - inv_frame.kappa1.values))),
                  float(np.max(np.abs(f2 * inv.kappa2.values
                                      - inv_frame.kappa2.values))))
        se.write_sphere_invariants_csv(args.output, inv)
        report["frame_residual_maxima"] = {
            k: v for k, v in
            sphere_normalization_residuals(curve, frames).items()}
        report["closed_form_vs_frame"] = dev
        report["frame_sign_relation"] = list(FRAME_FROM_CLOSED_FORM)

    se.write_json(_sidecar(args.output), report)
    return 0


def cmd_flow(args) -> int:
    import numpy as np

    from . import serialization as se
    from .periodic_calculus import quadrature

    config = _build_config(args)
    t_end = config.t_end
    started = time.perf_counter()

    if args.kind == "kdv":
        from .cone_geometry import ConeInvariants
        from .evolution_engine import KdvStepper, Trajectory
        from .hamiltonian_flows import hamiltonian_h
        from .periodic_calculus import GridFunction

        inv = se.read_cone_invariants_csv(args.input,
                                          assume_unit_k0=args.unit_speed)
        grid = inv.grid
        dt = config.dt if config.dt is not None else 1e-4
        stepper = KdvStepper(grid, dt, scheme=config.scheme)
        n_out = max(2, args.outputs)
        n_steps = max(1, int(round(t_end / dt)))
        per = max(1, n_steps // (n_out - 1))
        a, b = inv.k1.values.copy(), inv.k2.values.copy()
        states, times = [inv], [0.0]
        mass0 = quadrature(a, grid.length)
        h0 = hamiltonian_h(inv)
        done = 0
        while done < n_steps:
            todo = min(per, n_steps - done)
            for _ in range(todo):
                a, b = stepper.step_values(a, b)
            done += todo
            states.append(ConeInvariants(inv.k0,
                                         GridFunction(grid, a.copy()),
                                         GridFunction(grid, b.copy())))
            times.append(done * dt)
        traj = Trajectory(tuple(times), tuple(states))
        se.write_trajectory(args.output, traj, config.to_dict())
        summary = {
            "kind": "kdv", "t_end": times[-1], "dt": dt,
            "scheme": config.scheme, "n_points": grid.n_points,
            "mass_drift": abs(quadrature(a, grid.length) - mass0),
            "hamiltonian_drift": abs(hamiltonian_h(states[-1]) - h0),
            "config_hash": config.hash(),
            "wall_time_s": round(time.perf_counter() - started, 3),
        }
    else:
        from .evolution_engine import run_realization_experiment

        calibration = _load_calibration(config.calibration)
        curve = se.read_cone_curve_csv(args.input)
        rep = run_realization_experiment(
            curve, t_end=t_end,
            dt_curve=config.dt, n_out=max(2, args.outputs),
            calibration=calibration)
        se.write_trajectory(args.output, rep["trajectories"]["curve"],
                            config.to_dict())
        summary = {
            "kind": "curve", "t_end": t_end,
            "dt_curve": rep["dt_curve"], "n_points": rep["n"],
            "k0_drift": rep["k0_drift"],
            "realization_vs_pde_rel_l2": rep["realization_vs_pde_rel_l2"],
            "projection_vs_sphere_max": rep["projection_vs_sphere_max"],
            "monodromy_eigenvalue_drift": rep["monodromy_eigenvalue_drift"],
            "hamiltonian_drift": rep["hamiltonian_drift"],
            "reprojection_events": rep["reprojection_events"],
            "config_hash": config.hash(),
            "wall_time_s": round(time.perf_counter() - started, 3),
        }
    se.write_json(os.path.join(args.output, "summary.json"), summary)
    return 0


def cmd_reconstruct(args) -> int:
    import numpy as np

    from . import serialization as se
    from .errors import GeometryError
    from .evolution_engine import monodromy, reconstruct_curve
    from .lorentz_core import cone_residual, random_lorentz

    config = _build_config(args)
    inv = se.read_cone_invariants_csv(args.input,
                                      assume_unit_k0=args.unit_speed)
    for name, gf in (("k0", inv.k0), ("k1", inv.k1), ("k2", inv.k2)):
        if not np.all(np.isfinite(gf.values)):
            raise GeometryError(f"non-finite {name} in {args.input}")

    if args.rho0 == "identity":
        rho0 = None
    elif args.rho0.startswith("random:"):
        rho0 = random_lorentz(int(args.rho0.split(":", 1)[1]), 0.5)
    else:
        raise SchemaViolation(f"--rho0 must be 'identity' or 'random:SEED', "
                              f"got {args.rho0!r}")

    solution = reconstruct_curve(inv, rho0=rho0, nsub=args.nsub)
    se.write_cone_curve_csv(args.output, solution.curve)
    mono = monodromy(solution)
    report = {
        "input": args.input,
        "cone_residual_max": float(np.max(cone_residual(
            solution.curve.samples))),
        "monodromy": {
            "matrix": [[float(v) for v in row] for row in mono.matrix],
            "eigenvalues": [[float(ev.real), float(ev.imag)]
                            for ev in mono.eigenvalues],
            "group_residual": mono.group_residual(),
            "pairing_residual": mono.pairing_residual(),
        },
        "config_hash": config.hash(),
    }
    try:
        from .cone_geometry import cone_invariants_closed_form

        back = cone_invariants_closed_form(solution.curve)
        report["round_trip_deviation"] = max(
            float(np.max(np.abs(back.k0.values - inv.k0.values))),
            float(np.max(np.abs(back.k1.values - inv.k1.values))),
            float(np.max(np.abs(back.k2.values - inv.k2.values))))
    except ConeflowError as exc:
        # Open curves (nonclosing invariants) have no periodic re-read.
        report["round_trip_deviation"] = None
        report["round_trip_note"] = str(exc)
    stem, _ = os.path.splitext(args.output)
    se.write_json(stem + "_monodromy.json", report)
    return 0


def cmd_verify(args) -> int:
    from . import serialization as se
    from .verification import run_suite

    config = _build_config(args)
    calibration = _load_calibration(config.calibration)
    report = run_suite(args.suite, config, calibration)
    if args.output:
        se.write_json(args.output, report)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    if not report["passed"]:
        failing = [c["name"] for c in report["checks"] if not c["pass"]]
        print("failed checks: " + ", ".join(failing), file=sys.stderr)
        return 1
    return 0


def cmd_calibrate(args) -> int:
    from . import correspondence as corr

    names = None
    curves = None
    if args.curves:
        wanted = [w.strip() for w in args.curves.split(",") if w.strip()]
        suite = dict(corr.default_suite())
        unknown = [w for w in wanted if w not in suite]
        if unknown:
            raise SchemaViolation(
                f"unknown calibration curves {unknown}; "
                f"available: {sorted(suite)}")
        names = wanted
        curves = [suite[w] for w in wanted]
    calib = corr.calibrate(curves=curves, names=names, path=args.output)
    print(f"sigma_cone: k_i(frame) = {calib.sigma_cone[0]:+d}*k1, "
          f"{calib.sigma_cone[1]:+d}*k2 (closed form)")
    print(f"sigma_corr: k_i(cone) = {calib.sigma_corr[0]:+d}*kappa1, "
          f"{calib.sigma_corr[1]:+d}*kappa2 (sphere frame read)")
    print(f"max deviation {calib.max_dev:.3e} over curves "
          f"{', '.join(calib.curves)} at N in {list(calib.n_values)}")
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coneflow",
        description="Moving frames, invariants and integrable curve flows "
                    "for null curves in Lorentzian R^4 and their conformal "
                    "plane images.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, config_flags=True):
        if config_flags:
            p.add_argument("--n", type=int, help="grid size override")
            p.add_argument("--length", type=float, help="domain period")
            p.add_argument("--dt", type=float, help="time step")
            p.add_argument("--t-end", dest="t_end", type=float,
                           help="final time")
            p.add_argument("--scheme", choices=("ifrk4", "rk4"),
                           help="KdV time stepper")
            p.add_argument("--diff", choices=("spectral", "fd4"),
                           help="differentiation rule")
            p.add_argument("--seed", type=int, help="fixture seed")
            p.add_argument("--calibration", help="calibration.json path")
            p.add_argument("--tol", action="append", metavar="KEY=VAL",
                           help="tolerance override (repeatable)")

    p = sub.add_parser("invariants",
                       help="differential invariants of a curve CSV")
    p.add_argument("--input", required=True, help="curve CSV")
    p.add_argument("--output", required=True, help="invariants CSV")
    p.add_argument("--space", choices=("cone", "sphere"), required=True)
    common(p)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("flow", help="integrate a curve flow or the KdV system")
    p.add_argument("--kind", choices=("curve", "kdv"), required=True)
    p.add_argument("--input", required=True,
                   help="curve CSV (curve) or invariants CSV (kdv)")
    p.add_argument("--output", required=True, help="trajectory directory")
    p.add_argument("--outputs", type=int, default=6,
                   help="number of stored time slices")
    p.add_argument("--unit-speed", action="store_true",
                   help="ignore the k0 column, assume arc length")
    common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("reconstruct",
                       help="curve and monodromy from invariants")
    p.add_argument("--input", required=True, help="invariants CSV")
    p.add_argument("--output", required=True, help="curve CSV")
    p.add_argument("--rho0", default="identity",
                   help="initial frame: identity or random:SEED")
    p.add_argument("--unit-speed", action="store_true",
                   help="ignore the k0 column, assume arc length")
    p.add_argument("--nsub", type=int, default=4,
                   help="frame ODE substeps per grid interval")
    common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("--suite", default="all",
                   choices=("all", "frames", "correspondence", "realization",
                            "operators"))
    p.add_argument("--output", help="write the JSON report here")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("calibrate", help="measure the sign relations")
    p.add_argument("--output", default="calibration.json")
    p.add_argument("--curves",
                   help="comma list restricting the built-in curve suite")
    common(p)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConeflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
