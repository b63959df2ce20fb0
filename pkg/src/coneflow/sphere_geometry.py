"""Curves in the affine chart of the conformal 2-sphere.

The group acts by Moebius transformations: with Theta factored as
g1(xi) g0(alpha, A) gm1(v) and q = ||m||^2/2 + v.m + ||v||^2/2,

    Theta . m = [alpha q xi + A(m + v)]
                / [alpha q ||xi||^2 / 2 + xi . A(m + v) + 1/alpha].

The moving frame rho = g1(eta) g0(beta, B) gm1(-m) is fixed by sending m
to 0 with unit first derivative and vanishing second derivative of the
normalized image y(x) = rho(x0) . m(x); per node

    beta = 1/||m'||,   B = [[m1', m2'], [-m2', m1']] / ||m'||,
    eta1 = m'.m''/||m'||^2,   eta2 = -det(m', m'')/||m'||^2.

y'''(x0) is the independent oracle for the invariants; the closed forms

    kappa1 = m'.m'''/||m'||^2 - (3/2)(m'.m'')^2/||m'||^4
             + (3/2) det(m',m'')^2/||m'||^4
    kappa2 = det(m',m''')/||m'||^2 - 3 (m'.m'') det(m',m'')/||m'||^4

match it exactly (both components, no sign flip). The frame-derived read
takes the w-column of K = rho_x rho^{-1} raw: kappa_i = K[i, 0]; its sign
relative to the closed form is (+1, -1) and is recorded, not hidden.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ChartBreakdown, DegenerateSpeed, PatternViolation
from .lorentz_core import (GroupFactors, compose_factors, factor,
                           lorentz_inverse, project_algebra)
from .periodic_calculus import (GridFunction, PeriodicGrid, _require_same_grid,
                                fd4_derivative, spectral_derivative)
from .tolerances import DEFAULTS
from .cone_geometry import ConeFrameField, MaurerCartanField

# Measured sign relation between the two kappa readers across the whole
# curve corpus and every N: frame read = FRAME_FROM_CLOSED_FORM * closed
# form, componentwise. Not tunable; the verify suite re-measures it.
FRAME_FROM_CLOSED_FORM = (1, -1)


@dataclass(frozen=True)
class SphereCurve:
    """Closed curve in the affine chart, one 2-vector per node."""

    grid: PeriodicGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (self.grid.n_points, 2):
            raise ValueError(f"samples shape {samples.shape} does not match "
                             f"({self.grid.n_points}, 2)")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class SphereInvariants:
    kappa1: GridFunction
    kappa2: GridFunction

    def __post_init__(self):
        _require_same_grid(self.kappa1.grid, self.kappa2.grid)

    @property
    def grid(self) -> PeriodicGrid:
        return self.kappa1.grid


# the frame and Maurer-Cartan containers are shared with the cone side
SphereFrameField = ConeFrameField


def _deriv(samples, length, order, method):
    if method == "spectral":
        return spectral_derivative(samples, length, order)
    if method == "fd4":
        return fd4_derivative(samples, length, order)
    raise ValueError(f"unknown method {method!r}")


def validate_sphere_curve(curve: SphereCurve, method: str = "spectral"):
    """Regularity check ||m'|| > 0, naming the offending node."""
    if not np.all(np.isfinite(curve.samples)):
        raise DegenerateSpeed("curve samples contain non-finite values",
                              node=int(np.argwhere(~np.isfinite(curve.samples))[0][0]))
    mp = _deriv(curve.samples, curve.grid.length, 1, method)
    speed = np.linalg.norm(mp, axis=1)
    if np.any(speed <= 1e-12 * max(1.0, speed.max())):
        raise DegenerateSpeed("curve has a degenerate node",
                              node=int(np.argmin(speed)))


def lift_values(m: np.ndarray) -> np.ndarray:
    """Standard cone representative (||m||^2/2, m1, m2, 1) per node."""
    n = len(m)
    return np.concatenate([0.5 * (m * m).sum(1)[:, None], m, np.ones((n, 1))],
                          axis=1)


def moebius_apply(theta: np.ndarray, curve: SphereCurve,
                  eps: float = 1e-10) -> SphereCurve:
    """Conformal action of a group element in the affine chart."""
    f = factor(theta)
    m = curve.samples
    mv = m + f.v
    q = 0.5 * (m * m).sum(1) + m @ f.v + 0.5 * float(f.v @ f.v)
    Amv = mv @ f.A.T
    num = f.alpha * q[:, None] * f.xi[None, :] + Amv
    den = (0.5 * f.alpha * float(f.xi @ f.xi) * q + Amv @ f.xi + 1.0 / f.alpha)
    scale = max(1.0, float(np.max(np.abs(den))))
    if np.any(np.abs(den) < eps * scale):
        node = int(np.argmin(np.abs(den)))
        raise ChartBreakdown("point maps to the chart's infinity",
                             node=node, denominator=float(den[node]))
    return SphereCurve(curve.grid, num / den[:, None])


def sphere_frame(curve: SphereCurve, method: str = "spectral") -> SphereFrameField:
    """Normalized conformal moving frame rho = g1(eta) g0(beta, B) gm1(-m)."""
    m = curve.samples
    length = curve.grid.length
    mp = _deriv(m, length, 1, method)
    mpp = _deriv(m, length, 2, method)
    speed2 = (mp * mp).sum(1)
    if np.any(speed2 <= 1e-24 * max(1.0, speed2.max())):
        raise DegenerateSpeed("curve has a degenerate node",
                              node=int(np.argmin(speed2)))
    speed = np.sqrt(speed2)
    beta = 1.0 / speed
    B = np.empty((len(m), 2, 2))
    B[:, 0, 0] = mp[:, 0] / speed
    B[:, 0, 1] = mp[:, 1] / speed
    B[:, 1, 0] = -mp[:, 1] / speed
    B[:, 1, 1] = mp[:, 0] / speed
    eta1 = (mp * mpp).sum(1) / speed2
    eta2 = -(mp[:, 0] * mpp[:, 1] - mp[:, 1] * mpp[:, 0]) / speed2
    factors = GroupFactors(alpha=beta, A=B, v=-m,
                           xi=np.stack([eta1, eta2], axis=1))
    rho = compose_factors(factors)
    return SphereFrameField(grid=curve.grid, rho=rho, factors=factors)


def _image_derivative_data(curve: SphereCurve, frames: SphereFrameField,
                           method: str, max_order: int):
    """Per-node derivatives of E = (Theta m~)_{1:2} and F = (Theta m~)_3.

    Theta is the frame at the SAME node, so index k gives the k-th
    x-derivative of the normalized image's homogeneous representative at
    its own base point. Differentiating the lift (smooth) rather than the
    chart image avoids the chart's singularities.
    """
    mt = lift_values(curve.samples)
    E, F = [], []
    for order in range(max_order + 1):
        d = mt if order == 0 else _deriv(mt, curve.grid.length, order, method)
        T = np.einsum("nij,nj->ni", frames.rho, d)
        E.append(T[:, 1:3])
        F.append(T[:, 3])
    return E, F


def _image_jets(E, F):
    """Chart-image derivatives y^(k) at the base point via y F = E."""
    y0 = E[0] / F[0][:, None]
    jets = [y0]
    binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]
    for k in range(1, len(E)):
        acc = E[k].copy()
        for j in range(k):
            acc -= binom[k][j] * jets[j] * F[k - j][:, None]
        jets.append(acc / F[0][:, None])
    return jets


def sphere_normalization_residuals(curve: SphereCurve, frames: SphereFrameField,
                                   method: str = "spectral") -> dict:
    """Residuals of g.m = 0, (g.m)' = e1, (g.m)'' = 0 at each base node."""
    _require_same_grid(curve.grid, frames.grid)
    E, F = _image_derivative_data(curve, frames, method, 2)
    y0, y1, y2 = _image_jets(E, F)
    e1 = np.array([1.0, 0.0])
    return {
        "g_m": float(np.linalg.norm(y0, axis=1).max()),
        "g_mp": float(np.linalg.norm(y1 - e1, axis=1).max()),
        "g_mpp": float(np.linalg.norm(y2, axis=1).max()),
    }


def normalized_image(curve: SphereCurve, base_index: int,
                     method: str = "spectral", chart_eps: float = 1e-6):
    """The curve x -> rho(x0) . m(x); the invariant oracle at x0.

    Returns (SphereCurve, mask): nodes pushed off the chart are masked
    (NaN samples) rather than extrapolated; the base node is always valid.
    """
    frames = sphere_frame(curve, method)
    theta = frames.rho[base_index]
    mt = lift_values(curve.samples)
    w = mt @ theta.T
    den = w[:, 3]
    scale = max(1.0, float(np.max(np.abs(den))))
    mask = np.abs(den) > chart_eps * scale
    if not mask[base_index]:
        raise ChartBreakdown("base point off its own chart", node=base_index)
    out = np.full((len(mt), 2), np.nan)
    out[mask] = w[mask, 1:3] / den[mask, None]
    image = object.__new__(SphereCurve)
    object.__setattr__(image, "grid", curve.grid)
    object.__setattr__(image, "samples", out)
    return image, mask


def normalized_image_third_derivative(curve: SphereCurve,
                                      method: str = "spectral") -> np.ndarray:
    """y'''(x0) of the normalized image, for every base node at once.

    This is the invariant oracle: it equals (kappa1, kappa2) nodewise.
    """
    frames = sphere_frame(curve, method)
    E, F = _image_derivative_data(curve, frames, method, 3)
    jets = _image_jets(E, F)
    return jets[3]


def sphere_invariants_closed_form(curve: SphereCurve,
                                  method: str = "spectral") -> SphereInvariants:
    """kappa from the displayed dot/determinant formulas."""
    m = curve.samples
    length = curve.grid.length
    mp, mpp, mppp = (_deriv(m, length, o, method) for o in (1, 2, 3))
    s2 = (mp * mp).sum(1)
    if np.any(s2 <= 1e-24 * max(1.0, s2.max())):
        raise DegenerateSpeed("curve has a degenerate node",
                              node=int(np.argmin(s2)))
    dot12 = (mp * mpp).sum(1)
    dot13 = (mp * mppp).sum(1)
    det12 = mp[:, 0] * mpp[:, 1] - mp[:, 1] * mpp[:, 0]
    det13 = mp[:, 0] * mppp[:, 1] - mp[:, 1] * mppp[:, 0]
    kappa1 = dot13 / s2 - 1.5 * dot12 ** 2 / s2 ** 2 + 1.5 * det12 ** 2 / s2 ** 2
    kappa2 = det13 / s2 - 3.0 * dot12 * det12 / s2 ** 2
    grid = curve.grid
    return SphereInvariants(GridFunction(grid, kappa1), GridFunction(grid, kappa2))


def sphere_maurer_cartan(curve: SphereCurve, method: str = "spectral",
                         tol_pattern: float | None = None) -> MaurerCartanField:
    """K = rho_x rho^{-1} for the sphere frame, projected onto the algebra."""
    tol_pattern = DEFAULTS["tol_pattern"] if tol_pattern is None else tol_pattern
    frames = sphere_frame(curve, method)
    rho = frames.rho
    n = rho.shape[0]
    rho_x = _deriv(rho.reshape(n, 16), curve.grid.length, 1, method).reshape(rho.shape)
    K_raw = rho_x @ lorentz_inverse(rho)
    K, defect = project_algebra(K_raw)
    scale = max(1.0, float(np.max(np.abs(K))))
    if defect > tol_pattern * scale:
        raise PatternViolation("numerical sphere K off the algebra shape",
                               defect=defect, tol=tol_pattern * scale)
    return MaurerCartanField(grid=curve.grid, K=K)


def sphere_pattern_defect(Kfield: MaurerCartanField) -> float:
    """Distance from the sphere Maurer-Cartan pattern (z = -e1, a = b = 0)."""
    K = Kfield.K
    off = max(float(np.max(np.abs(K[:, 0, 0]))),
              float(np.max(np.abs(K[:, 1, 2]))),
              float(np.max(np.abs(K[:, 0, 2]))),
              float(np.max(np.abs(K[:, 0, 1] + 1.0))))
    return off / max(1.0, float(np.max(np.abs(K))))


def sphere_invariants_from_frame(curve: SphereCurve, method: str = "spectral",
                                 tol_pattern: float | None = None) -> SphereInvariants:
    """Frame-derived kappa: the raw w-column read kappa_i = K[i, 0].

    Relative to the closed form the measured signs are (+1, -1); the
    verify report carries that record.
    """
    tol_pattern = DEFAULTS["tol_pattern"] if tol_pattern is None else tol_pattern
    Kfield = sphere_maurer_cartan(curve, method, tol_pattern)
    defect = sphere_pattern_defect(Kfield)
    if defect > tol_pattern:
        raise PatternViolation("K is off the sphere invariant pattern",
                               defect=defect, tol=tol_pattern)
    K = Kfield.K
    grid = curve.grid
    return SphereInvariants(GridFunction(grid, K[:, 1, 0]),
                            GridFunction(grid, K[:, 2, 0]))
