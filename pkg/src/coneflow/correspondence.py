"""Projectivization between cone curves and plane curves, with sign calibration.

A star-shaped cone curve determines a plane curve m = (u1/u3, u2/u3), and a
plane curve lifts back to the null curve mt = (|m|^2/2, m1, m2, 1).  Rescaling
the lift by 1/|mt'|_J produces the unique lift parametrized by cone arc length
(|mt'|_J = |m'| identically, so the scaling never needs the ambient metric).

Frame-derived invariants on the two sides agree up to one global sign per
component.  The signs are an empirical fact about the normalization
conventions, not a tunable: `calibrate` measures them once over a suite of
curves and resolutions, fails loudly if any curve disagrees, and persists the
result so every later run works with the same fixed vector.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import cone_geometry as cg
from . import sphere_geometry as sg
from .errors import (CalibrationError, CalibrationInconsistent,
                     CalibrationMissing, ChartBreakdown, DegenerateSpeed,
                     GridMismatch)
from .periodic_calculus import PeriodicGrid, resample_values

# Frame pipelines on a raw N=256 grid leave ~1e-4 spectral tails in the
# third-derivative reads, so matching is done on a trig-oversampled copy of
# the curve (same function, finer grid).  Oversampling has an optimum: the
# pipeline differentiates twice spectrally, which amplifies roundoff ~N^2,
# and past ~1k nodes the noise floor overtakes the shrinking tails.  512 sits
# comfortably in the valley for analytic curves at desk scale.
FINE_FLOOR = 512


def _fine_size(n: int, n_over: int | None) -> int:
    if n_over is not None:
        return n_over * n
    return max(FINE_FLOOR, n)


@dataclass(frozen=True)
class SignCalibration:
    """Measured sign vectors relating the invariant pipelines.

    sigma_cone relates closed-form to frame-derived cone invariants,
    sigma_corr relates cone invariants of the arc-length lift to sphere
    invariants of the underlying plane curve:  k_i = sigma_corr_i * kappa_i.
    """

    sigma_cone: tuple[int, int]
    sigma_corr: tuple[int, int]
    curves: tuple[str, ...]
    n_values: tuple[int, ...]
    max_dev: float

    def __post_init__(self):
        for s in (*self.sigma_cone, *self.sigma_corr):
            if s not in (-1, 1):
                raise CalibrationInconsistent("sign entries must be +1 or -1",
                                              value=s)

    def to_dict(self) -> dict:
        return {
            "sigma_cone": list(self.sigma_cone),
            "sigma_corr": list(self.sigma_corr),
            "curves": list(self.curves),
            "N": list(self.n_values),
            "max_dev": self.max_dev,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignCalibration":
        try:
            return cls(
                sigma_cone=tuple(int(s) for s in data["sigma_cone"]),
                sigma_corr=tuple(int(s) for s in data["sigma_corr"]),
                curves=tuple(str(c) for c in data["curves"]),
                n_values=tuple(int(n) for n in data["N"]),
                max_dev=float(data["max_dev"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CalibrationMissing(f"malformed calibration data: {exc}")

    def save(self, path: str | os.PathLike) -> None:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        tmp = f"{os.fspath(path)}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SignCalibration":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CalibrationMissing(f"cannot load calibration: {exc}",
                                     path=os.fspath(path))
        return cls.from_dict(data)


def project(curve: cg.ConeCurve, eps: float = 1e-12) -> sg.SphereCurve:
    """Projectivization: (u0,u1,u2,u3) -> (u1/u3, u2/u3), scale-invariant."""
    u3 = curve.samples[:, 3]
    scale = max(1.0, float(np.max(np.abs(curve.samples))))
    bad = np.abs(u3) < eps * scale
    if bad.any():
        raise ChartBreakdown("u3 vanishes; projection chart breaks down",
                             node=int(np.argmax(bad)))
    return sg.SphereCurve(curve.grid, curve.samples[:, 1:3] / u3[:, None])


def lift_standard(curve: sg.SphereCurve) -> cg.ConeCurve:
    """Lift m to the null curve (|m|^2/2, m1, m2, 1); on-cone algebraically."""
    return cg.ConeCurve(curve.grid, sg.lift_values(curve.samples))


def lift_arclength(curve: sg.SphereCurve, method: str = "spectral") -> cg.ConeCurve:
    """Lift m and rescale by 1/|m'| so the result has unit cone speed.

    The lifted curve satisfies <u', u'>_J = 1 identically: the lift is null,
    so the radial component of u' drops out of the Minkowski norm and only
    the |m'|-normalized part survives.
    """
    sp = sg._deriv(curve.samples, curve.grid.length, 1, method)
    speed = np.linalg.norm(sp, axis=1)
    if np.min(speed) < 1e-10 * max(1.0, float(np.max(speed))):
        raise DegenerateSpeed("plane curve has a near-stationary node",
                              node=int(np.argmin(speed)))
    u = sg.lift_values(curve.samples) / speed[:, None]
    return cg.ConeCurve(curve.grid, u)


def _resample_sphere(curve: sg.SphereCurve, n_new: int) -> sg.SphereCurve:
    if n_new == curve.grid.n_points:
        return curve
    vals = resample_values(curve.samples, n_new)
    return sg.SphereCurve(PeriodicGrid(n_new, curve.grid.length), vals)


def _two_pipeline_invariants(m: sg.SphereCurve, n_over: int | None):
    """Frame-derived cone invariants of the arc-length lift, and frame-derived
    sphere invariants of the same curve, both on an oversampled grid."""
    fine = _resample_sphere(m, _fine_size(m.grid.n_points, n_over))
    u = lift_arclength(fine)
    k = cg.cone_invariants(u)
    kap = sg.sphere_invariants_from_frame(fine)
    return k, kap


def match_invariants(m: sg.SphereCurve, calib: SignCalibration,
                     n_over: int | None = None, tol: float | None = None) -> dict:
    """Check k_i(arc-length lift of m) = sigma_corr_i * kappa_i(m) nodewise.

    Returns the deviation report; with `tol` set, raises
    CalibrationInconsistent when the match fails.
    """
    if calib is None:
        raise CalibrationMissing("match_invariants requires a SignCalibration")
    k, kap = _two_pipeline_invariants(m, n_over)
    s1, s2 = calib.sigma_corr
    dev1 = float(np.max(np.abs(k.k1.values - s1 * kap.kappa1.values)))
    dev2 = float(np.max(np.abs(k.k2.values - s2 * kap.kappa2.values)))
    report = {
        "n": m.grid.n_points,
        "n_fine": _fine_size(m.grid.n_points, n_over),
        "dev_k1": dev1,
        "dev_k2": dev2,
        "max_dev": max(dev1, dev2),
        "sigma_corr": list(calib.sigma_corr),
    }
    if tol is not None and report["max_dev"] > tol:
        raise CalibrationInconsistent("invariant correspondence violated",
                                      max_dev=report["max_dev"], tol=tol)
    return report


def default_suite(n: int = 512, length: float = 2.0 * np.pi):
    """Calibration curves: circle, doubly traversed circle, and a figure-eight.

    Three geometrically distinct closed curves; the figure-eight has both
    invariants nonconstant and nonzero, which pins down both signs.
    """
    grid = PeriodicGrid(n, length)
    x = grid.nodes
    circle = sg.SphereCurve(grid, np.stack([np.cos(x), np.sin(x)], axis=1))
    fast = sg.SphereCurve(grid, np.stack([np.cos(2 * x), np.sin(2 * x)], axis=1))
    eight = sg.SphereCurve(grid, np.stack([np.cos(x), np.sin(2 * x)], axis=1))
    return [("circle", circle), ("circle-speed2", fast), ("figure-eight", eight)]


def _sign_vote(ref1, ref2, cand1, cand2, tol):
    """Per-component winning sign of max|ref - s*cand|, or None if the curve
    cannot distinguish the signs (candidate component essentially zero)."""
    votes, devs = [], []
    for ref, cand in ((ref1, cand1), (ref2, cand2)):
        dev_p = float(np.max(np.abs(ref - cand)))
        dev_m = float(np.max(np.abs(ref + cand)))
        if max(dev_p, dev_m) <= 10.0 * tol:
            votes.append(None)
            devs.append(min(dev_p, dev_m))
        else:
            votes.append(1 if dev_p <= dev_m else -1)
            devs.append(min(dev_p, dev_m))
    return votes, devs


def calibrate(curves=None, names=None, n_values=(128, 256, 512),
              n_over: int | None = None, tol: float = 1e-4,
              path: str | os.PathLike | None = None) -> SignCalibration:
    """Measure the global sign vectors over a suite of curves and resolutions.

    Every (curve, resolution) pair gets a vote per component; a pair whose
    invariant component vanishes identically abstains.  All votes must agree
    and every winning deviation must clear `tol`, otherwise the relation
    claimed by the toolkit would be false and we refuse to emit a calibration.
    """
    if curves is None:
        names, curves = zip(*default_suite())
    if names is None:
        names = tuple(f"curve{i}" for i in range(len(curves)))
    if len(curves) < 3:
        raise CalibrationError(
            "calibration needs at least 3 geometrically distinct curves",
            got=len(curves))

    cone_votes = ([], [])
    corr_votes = ([], [])
    max_dev = 0.0
    for name, m in zip(names, curves):
        for n in n_values:
            mn = _resample_sphere(m, n)
            fine = _resample_sphere(mn, _fine_size(n, n_over))
            u = lift_arclength(fine)
            k_fr = cg.cone_invariants(u)
            k_cf = cg.cone_invariants_closed_form(u)
            kap = sg.sphere_invariants_from_frame(fine)

            votes, devs = _sign_vote(k_cf.k1.values, k_cf.k2.values,
                                     k_fr.k1.values, k_fr.k2.values, tol)
            for i in range(2):
                if votes[i] is not None:
                    cone_votes[i].append((name, n, votes[i], devs[i]))
                    max_dev = max(max_dev, devs[i])
            votes, devs = _sign_vote(k_fr.k1.values, k_fr.k2.values,
                                     kap.kappa1.values, kap.kappa2.values, tol)
            for i in range(2):
                if votes[i] is not None:
                    corr_votes[i].append((name, n, votes[i], devs[i]))
                    max_dev = max(max_dev, devs[i])

    def resolve(votes, what, comp):
        if not votes:
            raise CalibrationInconsistent(
                f"{what} sign for component {comp} undetermined by the suite")
        signs = {v for (_, _, v, _) in votes}
        if len(signs) != 1:
            raise CalibrationInconsistent(
                f"{what} sign for component {comp} differs across curves",
                votes=[(nm, n, v) for (nm, n, v, _) in votes])
        worst = max(d for (_, _, _, d) in votes)
        if worst > tol:
            raise CalibrationInconsistent(
                f"{what} component {comp}: best sign still misses tolerance",
                max_dev=worst, tol=tol)
        return signs.pop()

    calib = SignCalibration(
        sigma_cone=(resolve(cone_votes[0], "closed-form/frame", 1),
                    resolve(cone_votes[1], "closed-form/frame", 2)),
        sigma_corr=(resolve(corr_votes[0], "cone/sphere", 1),
                    resolve(corr_votes[1], "cone/sphere", 2)),
        curves=tuple(names),
        n_values=tuple(int(n) for n in n_values),
        max_dev=max_dev,
    )
    if path is not None:
        calib.save(path)
    return calib


def correspond_flow(u_traj, m_traj, tol: float | None = None) -> dict:
    """Compare a cone trajectory with a sphere trajectory time slice by slice.

    Projects each cone state and measures the nodewise distance to the sphere
    state at the same time.  Trajectories must share times and grid size.
    """
    tu = np.asarray(u_traj.times, dtype=float)
    tm = np.asarray(m_traj.times, dtype=float)
    if tu.shape != tm.shape or np.max(np.abs(tu - tm)) > 1e-12 * max(1.0, tu[-1]):
        raise GridMismatch("trajectories sample different times")
    devs = []
    for u_state, m_state in zip(u_traj.states, m_traj.states):
        if u_state.grid.n_points != m_state.grid.n_points:
            raise GridMismatch("trajectories live on different grids",
                               n_cone=u_state.grid.n_points, n_sphere=m_state.grid.n_points)
        proj = project(u_state)
        devs.append(float(np.max(np.abs(proj.samples - m_state.samples))))
    report = {
        "times": tu.tolist(),
        "deviations": devs,
        "max_dev": max(devs) if devs else 0.0,
    }
    if tol is not None and report["max_dev"] > tol:
        raise CalibrationInconsistent("flow correspondence violated",
                                      max_dev=report["max_dev"], tol=tol)
    return report
