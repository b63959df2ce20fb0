"""Star-shaped curves on the light cone: moving frame and invariants.

The right moving frame rho = g1(xi) g0(alpha, A) gm1(v) is fixed by the
normalizations rho u = e4, rho u' = (0, k0, 0, 0), (rho u'')_3 = 0, which
give per node

    v = -uhat/u3,  alpha = u3,
    A rows from p = (uhat' - uhat u3'/u3) / k0  (a rotation),
    xi1 = -u3' / (u3 k0),
    xi2 from the numerically enforced condition (rho u'')_3 = 0.

Invariants come from the Maurer-Cartan field K = rho_x rho^{-1}, whose
pattern has z = (-k0, 0) in the top row and w = (-k1, -k2) in the left
column; the frame-derived read is the toolkit's ground truth. The closed
forms implemented here are the variants that reproduce the frame-derived
values on every test curve (the analytic displays they were derived from
carry sign/power slips; `verify` reports the alternatives side by side):

    k0 = sqrt<u', u'>_J
    k1 = (<u',u''>^2 - ||u''||_J^2 k0^2) / (2 k0^5)
    k2 = det(u,u',u''')/(u3 k0^3) - 3 <u',u''> det(u,u',u'')/(u3 k0^5)

with 3x3 determinants over the component rows (u1, u2, u3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (ChartBreakdown, GeometryError, PatternViolation,
                     ProjectionDefect, RadialPoint)
from .lorentz_core import (E4, J, GroupFactors, compose_factors, lorentz_inverse,
                           minkowski_inner, project_algebra)
from .periodic_calculus import (GridFunction, PeriodicGrid, _require_same_grid,
                                antiderivative_eval, fd4_derivative,
                                spectral_derivative, trig_interp_eval)
from .tolerances import DEFAULTS


@dataclass(frozen=True)
class ConeCurve:
    """Closed curve sampled on a periodic grid, one Minkowski vector per node."""

    grid: PeriodicGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (self.grid.n_points, 4):
            raise ValueError(f"samples shape {samples.shape} does not match "
                             f"({self.grid.n_points}, 4)")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class ConeFrameField:
    """Per-node moving frame rho with its parabolic factors."""

    grid: PeriodicGrid
    rho: np.ndarray = field(repr=False)
    factors: GroupFactors = field(repr=False)


@dataclass(frozen=True)
class ConeInvariants:
    """The generating differential invariants (k0, k1, k2)."""

    k0: GridFunction
    k1: GridFunction
    k2: GridFunction

    def __post_init__(self):
        _require_same_grid(self.k0.grid, self.k1.grid)
        _require_same_grid(self.k0.grid, self.k2.grid)

    @property
    def grid(self) -> PeriodicGrid:
        return self.k0.grid


@dataclass(frozen=True)
class MaurerCartanField:
    """Algebra-valued field K(x) = rho_x rho^{-1} along the curve."""

    grid: PeriodicGrid
    K: np.ndarray = field(repr=False)


def _deriv(samples: np.ndarray, length: float, order: int, method: str) -> np.ndarray:
    if method == "spectral":
        return spectral_derivative(samples, length, order)
    if method == "fd4":
        return fd4_derivative(samples, length, order)
    raise ValueError(f"unknown method {method!r}")


def curve_derivatives(curve: ConeCurve, orders=(1, 2), method: str = "spectral"):
    """x-derivatives of the sample field, one array per requested order."""
    return tuple(_deriv(curve.samples, curve.grid.length, o, method) for o in orders)


def _checked_speed(speed2: np.ndarray) -> np.ndarray:
    """sqrt of <u',u'>_J after the star-shapedness check.

    The floor is relative: an analytic radial point comes out of the
    spectral derivative at roundoff level, never as an exact zero.
    """
    floor = 1e-12 * float(np.max(speed2, initial=0.0))
    if np.any(speed2 <= floor):
        node = int(np.argmin(speed2))
        raise RadialPoint("curve is not star-shaped: <u',u'>_J vanishes",
                          node=node, value=float(speed2[node]))
    return np.sqrt(speed2)


def validate_cone_curve(curve: ConeCurve, tol_cone: float | None = None,
                        method: str = "spectral"):
    """Check cone membership, the chart assumption u3 != 0, and star-shapedness.

    Raises a typed error naming the first offending node.
    """
    tol_cone = DEFAULTS["tol_cone"] if tol_cone is None else tol_cone
    u = curve.samples
    if not np.all(np.isfinite(u)):
        raise GeometryError("curve samples contain non-finite values",
                            node=int(np.argwhere(~np.isfinite(u))[0][0]))
    res = np.abs(minkowski_inner(u, u))
    if np.any(res > tol_cone):
        node = int(np.argmax(res))
        raise GeometryError("curve is off the light cone",
                            node=node, residual=float(res[node]), tol=tol_cone)
    scale = np.max(np.abs(u))
    if np.any(np.abs(u[:, 3]) <= 1e-12 * scale):
        node = int(np.argmin(np.abs(u[:, 3])))
        raise ChartBreakdown("u3 vanishes (chart assumption)", node=node)
    (up,) = curve_derivatives(curve, (1,), method)
    _checked_speed(minkowski_inner(up, up))


def _frame_ingredients(samples: np.ndarray, length: float, method: str):
    """Shared kinematics of the frame: derivatives, k0, A-rows, xi."""
    up = _deriv(samples, length, 1, method)
    upp = _deriv(samples, length, 2, method)
    k0 = _checked_speed(minkowski_inner(up, up))
    u3 = samples[:, 3]
    if np.any(np.abs(u3) <= 1e-12 * np.max(np.abs(samples))):
        raise ChartBreakdown("u3 vanishes", node=int(np.argmin(np.abs(u3))))
    uhat = samples[:, 1:3]
    v = -uhat / u3[:, None]
    p = (up[:, 1:3] - uhat * (up[:, 3] / u3)[:, None]) / k0[:, None]
    p = p / np.linalg.norm(p, axis=1)[:, None]  # keep A an exact rotation
    xi1 = -up[:, 3] / (u3 * k0)
    # xi2 enforces (rho u'')_3 = 0: with y = g0 gm1 u'', xi2 = -y2/y0
    wv = np.empty_like(upp)
    wv[:, 0] = upp[:, 0] + (v * upp[:, 1:3]).sum(1) + 0.5 * (v * v).sum(1) * upp[:, 3]
    wv[:, 1:3] = upp[:, 1:3] + v * upp[:, 3:4]
    wv[:, 3] = upp[:, 3]
    y0 = u3 * wv[:, 0]
    y2 = -p[:, 1] * wv[:, 1] + p[:, 0] * wv[:, 2]  # second row of A
    xi2 = -y2 / y0
    A = np.empty((len(samples), 2, 2))
    A[:, 0, 0] = p[:, 0]
    A[:, 0, 1] = p[:, 1]
    A[:, 1, 0] = -p[:, 1]
    A[:, 1, 1] = p[:, 0]
    return up, upp, k0, u3, v, A, xi1, xi2


def cone_frame(curve: ConeCurve, method: str = "spectral") -> ConeFrameField:
    """The normalized moving frame g1(xi) g0(u3, A) gm1(-uhat/u3) per node."""
    _, _, k0, u3, v, A, xi1, xi2 = _frame_ingredients(
        curve.samples, curve.grid.length, method)
    factors = GroupFactors(alpha=u3.copy(), A=A,
                           v=v, xi=np.stack([xi1, xi2], axis=1))
    rho = compose_factors(factors)
    return ConeFrameField(grid=curve.grid, rho=rho, factors=factors)


def normalization_residuals(curve: ConeCurve, frames: ConeFrameField,
                            method: str = "spectral") -> dict:
    """Residuals of the defining normalizations, maxima over nodes.

    Keys: rho_u (||rho u - e4||), rho_up (||rho u' - (0,k0,0,0)||),
    rho_upp_c (|(rho u'')_3|), rho_upp_a (|(rho u'')_1 - k0^2|).
    """
    _require_same_grid(curve.grid, frames.grid)
    up, upp = curve_derivatives(curve, (1, 2), method)
    k0 = np.sqrt(minkowski_inner(up, up))
    ru = np.einsum("nij,nj->ni", frames.rho, curve.samples)
    rup = np.einsum("nij,nj->ni", frames.rho, up)
    rupp = np.einsum("nij,nj->ni", frames.rho, upp)
    target_up = np.zeros_like(rup)
    target_up[:, 1] = k0
    res_u = np.linalg.norm(ru - E4, axis=1)
    res_up = np.linalg.norm(rup - target_up, axis=1)
    res_c = np.abs(rupp[:, 2])
    res_a = np.abs(rupp[:, 0] - k0 ** 2)
    overall = np.maximum(np.maximum(res_u, res_up), np.maximum(res_c, res_a))
    return {
        "rho_u": float(res_u.max()),
        "rho_up": float(res_up.max()),
        "rho_upp_c": float(res_c.max()),
        "rho_upp_a": float(res_a.max()),
        "worst_node": int(np.argmax(overall)),
    }


def _det3(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """3x3 determinant with rows (a, b, c) over the components (u1, u2, u3)."""
    return np.linalg.det(np.stack([a[:, 1:4], b[:, 1:4], c[:, 1:4]], axis=1))


def cone_invariants_closed_form(curve: ConeCurve,
                                method: str = "spectral") -> ConeInvariants:
    """Differential invariants from the curve derivatives alone."""
    u = curve.samples
    length = curve.grid.length
    up, upp, uppp = (_deriv(u, length, o, method) for o in (1, 2, 3))
    k0 = _checked_speed(minkowski_inner(up, up))
    u3 = u[:, 3]
    dot12 = minkowski_inner(up, upp)
    k1 = (dot12 ** 2 - minkowski_inner(upp, upp) * k0 ** 2) / (2 * k0 ** 5)
    d1 = _det3(u, up, uppp)
    d2 = _det3(u, up, upp)
    k2 = d1 / (u3 * k0 ** 3) - 3 * dot12 * d2 / (u3 * k0 ** 5)
    grid = curve.grid
    return ConeInvariants(GridFunction(grid, k0), GridFunction(grid, k1),
                          GridFunction(grid, k2))


def xi2_closed_form(curve: ConeCurve, method: str = "spectral") -> np.ndarray:
    """Analytic cross-check value -det(u,u',u'')/(u3 k0^3) for xi2."""
    u = curve.samples
    up, upp = curve_derivatives(curve, (1, 2), method)
    k0 = np.sqrt(minkowski_inner(up, up))
    return -_det3(u, up, upp) / (u[:, 3] * k0 ** 3)


def maurer_cartan(frames: ConeFrameField, method: str = "spectral",
                  tol_pattern: float | None = None) -> MaurerCartanField:
    """K = rho_x rho^{-1}, projected onto the algebra shape.

    The projection defect (relative to max(1, |K|)) must stay below
    tol_pattern; a larger defect means the frame field is not resolved.
    """
    tol_pattern = DEFAULTS["tol_pattern"] if tol_pattern is None else tol_pattern
    rho = frames.rho
    n = rho.shape[0]
    rho_x = _deriv(rho.reshape(n, 16), frames.grid.length, 1, method).reshape(rho.shape)
    K_raw = rho_x @ lorentz_inverse(rho)
    K, defect = project_algebra(K_raw)
    scale = max(1.0, float(np.max(np.abs(K))))
    if defect > tol_pattern * scale:
        raise ProjectionDefect("numerical K is off the algebra shape",
                               defect=defect, tol=tol_pattern * scale)
    return MaurerCartanField(grid=frames.grid, K=K)


def cone_pattern_defect(Kfield: MaurerCartanField) -> float:
    """Largest entry outside the cone Maurer-Cartan pattern, relative."""
    K = Kfield.K
    off = max(float(np.max(np.abs(K[:, 0, 0]))),
              float(np.max(np.abs(K[:, 1, 2]))),
              float(np.max(np.abs(K[:, 0, 2]))))
    return off / max(1.0, float(np.max(np.abs(K))))


def invariants_from_frame(Kfield: MaurerCartanField,
                          tol_pattern: float | None = None) -> ConeInvariants:
    """Ground-truth invariants read off the Maurer-Cartan entries.

    k0 = -K[0,1] (top row), k1 = -K[1,0], k2 = -K[2,0] (left column).
    """
    tol_pattern = DEFAULTS["tol_pattern"] if tol_pattern is None else tol_pattern
    defect = cone_pattern_defect(Kfield)
    if defect > tol_pattern:
        raise PatternViolation("K is off the cone invariant pattern",
                               defect=defect, tol=tol_pattern)
    K = Kfield.K
    grid = Kfield.grid
    return ConeInvariants(GridFunction(grid, -K[:, 0, 1]),
                          GridFunction(grid, -K[:, 1, 0]),
                          GridFunction(grid, -K[:, 2, 0]))


def cone_invariants(curve: ConeCurve, method: str = "spectral") -> ConeInvariants:
    """Frame-derived invariants of a curve (the full ground-truth pipeline)."""
    return invariants_from_frame(maurer_cartan(cone_frame(curve, method), method))


def reparametrize_arclength(curve: ConeCurve, n_out: int | None = None,
                            method: str = "spectral") -> ConeCurve:
    """Resample the curve uniformly in arc length s, ds = k0 dx.

    The new period is the total arc length Lambda = int k0 dx. Node
    positions solve s(x_j) = j Lambda / N by Newton iteration on the
    trigonometric interpolant of k0; samples are evaluated by
    trigonometric interpolation, which keeps the curve on the cone.
    """
    u = curve.samples
    length = curve.grid.length
    n = n_out or curve.grid.n_points
    up = _deriv(u, length, 1, method)
    k0 = _checked_speed(minkowski_inner(up, up))
    lam = float(quad_mean(k0) * length)
    targets = np.arange(n) * lam / n
    xj = targets * length / lam
    for _ in range(50):
        res = antiderivative_eval(k0, length, xj) - targets
        slope = trig_interp_eval(k0, length, xj)
        step = res / slope
        xj = xj - step
        if np.max(np.abs(step)) < 1e-14 * length:
            break
    final = np.max(np.abs(antiderivative_eval(k0, length, xj) - targets))
    if final > 1e-9 * lam:
        raise RuntimeError(f"arc-length inversion did not converge ({final:.2e})")
    new_samples = trig_interp_eval(u, length, xj)
    return ConeCurve(PeriodicGrid(n, lam), new_samples)


def quad_mean(values: np.ndarray) -> float:
    """Mean over the periodic grid (first Fourier coefficient)."""
    return float(np.mean(values))
