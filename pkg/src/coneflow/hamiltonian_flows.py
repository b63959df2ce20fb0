"""Invariant curve flows, induced invariant evolutions, and Poisson tensors.

A velocity field tangent to the cone is written in the moving frame with
coefficients (r1, r2, r3); the flow preserves arc length exactly when
r3 = -r1'/k0.  The induced evolution of the invariants is a local expression
in (k, r) and, restricted to arc-length parametrization, is Hamiltonian:
k_t = P grad(h).  A second compatible tensor Q0 restricts to diag(-D, D).

Convention: Hamiltonian vector fields are Tensor . gradient with no extra
1/2, which is the normalization under which h = 1/2 int(k1^2 + k2^2) dx
generates exactly the coupled KdV system implemented in kdv_rhs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cone_geometry import ConeCurve, ConeFrameField, ConeInvariants
from .errors import DegenerateSpeed, GridMismatch, RadialPoint
from .periodic_calculus import (Deriv, GridFunction, LinearPeriodicOperator,
                                Mult, PeriodicGrid, Zero, apply_operator,
                                band_limited, quadrature, spectral_derivative)
from .sphere_geometry import SphereCurve, validate_sphere_curve

# The invariant triple doubles as the state of the integrable system.
InvariantField = ConeInvariants


@dataclass(frozen=True)
class FlowCoefficients:
    """Frame coefficients of a curve velocity field.

    Cone flows carry (r1, r2, r3); sphere flows only (s1, s2), stored in the
    first two slots with r3 = None.
    """

    r1: GridFunction
    r2: GridFunction
    r3: GridFunction | None = None

    def __post_init__(self):
        if self.r1.grid != self.r2.grid:
            raise GridMismatch("flow coefficient grids differ")
        if self.r3 is not None and self.r3.grid != self.r1.grid:
            raise GridMismatch("flow coefficient grids differ")

    @property
    def grid(self) -> PeriodicGrid:
        return self.r1.grid

    # sphere-side aliases
    @property
    def s1(self) -> GridFunction:
        return self.r1

    @property
    def s2(self) -> GridFunction:
        return self.r2

    @classmethod
    def cone(cls, r1, r2, r3) -> "FlowCoefficients":
        return cls(r1, r2, r3)

    @classmethod
    def sphere(cls, s1, s2) -> "FlowCoefficients":
        return cls(s1, s2, None)

    @classmethod
    def arclength(cls, r1: GridFunction, r2: GridFunction,
                  k0: GridFunction) -> "FlowCoefficients":
        """Complete (r1, r2) with the unique r3 preserving arc length."""
        return cls(r1, r2, arclength_r3(r1, k0))

    def arclength_defect(self, k0: GridFunction) -> float:
        """max |r3 + r1'/k0|; zero exactly for arc-length-preserving flows."""
        if self.r3 is None:
            raise ValueError("sphere coefficients carry no r3")
        want = arclength_r3(self.r1, k0)
        return float(np.max(np.abs(self.r3.values - want.values)))


def arclength_r3(r1: GridFunction, k0: GridFunction) -> GridFunction:
    """The third coefficient forced by arc-length preservation: r3 = -r1'/k0."""
    if r1.grid != k0.grid:
        raise GridMismatch("r1 and k0 live on different grids")
    _require_positive(k0.values, "k0")
    r1p = spectral_derivative(r1.values, r1.grid.length, 1)
    return GridFunction(r1.grid, -r1p / k0.values)


def _require_positive(values: np.ndarray, name: str):
    if np.min(values) <= 1e-12 * max(1.0, float(np.max(np.abs(values)))):
        raise RadialPoint(f"{name} must stay positive",
                          node=int(np.argmin(values)))


def assemble_cone_flow(curve: ConeCurve, frames: ConeFrameField,
                       r: FlowCoefficients) -> np.ndarray:
    """Velocity field u_t of the cone flow with frame coefficients r.

    The hat components follow the frame block formula (A is the rotation
    factor, xi the translation factor); u0_t is then fixed by exact tangency
    <u, u_t>_J = 0, so the returned field never pushes off the cone.
    """
    if curve.grid != frames.grid or r.grid != curve.grid:
        raise GridMismatch("curve, frames and coefficients must share a grid")
    if r.r3 is None:
        raise ValueError("cone flows need all three coefficients")
    u = curve.samples
    uhat, u0, u3 = u[:, 1:3], u[:, 0], u[:, 3]
    rhat = np.stack([r.r1.values, r.r2.values], axis=1)
    radial = r.r3.values - (frames.factors.xi * rhat).sum(axis=1)
    uhat_t = np.einsum("nji,nj->ni", frames.factors.A, rhat) \
        + uhat * radial[:, None]
    u3_t = u3 * radial
    u0_t = ((uhat * uhat_t).sum(axis=1) - u0 * u3_t) / u3
    return np.stack([u0_t, uhat_t[:, 0], uhat_t[:, 1], u3_t], axis=1)


def assemble_sphere_flow(curve: SphereCurve, s: FlowCoefficients,
                         method: str = "spectral") -> np.ndarray:
    """Velocity field m_t = [[m1', -m2'], [m2', m1']] (s1, s2)^T."""
    if s.grid != curve.grid:
        raise GridMismatch("curve and coefficients must share a grid")
    validate_sphere_curve(curve, method)
    if method == "spectral":
        mp = spectral_derivative(curve.samples, curve.grid.length, 1)
    else:
        from .periodic_calculus import fd4_derivative
        mp = fd4_derivative(curve.samples, curve.grid.length, 1)
    s1, s2 = s.s1.values, s.s2.values
    return np.stack([mp[:, 0] * s1 - mp[:, 1] * s2,
                     mp[:, 1] * s1 + mp[:, 0] * s2], axis=1)


def induced_invariant_evolution(k: ConeInvariants, r: FlowCoefficients):
    """Evolution (k0_t, k1_t, k2_t) induced on the invariants by the flow r.

    Structure equations of the flow, with the two displayed intermediates:
        n1 = (k1 r1 + k2 r2 + r3') / k0
        n2 = (D(r2'/k0) + k2 r1 - k1 r2) / k0
    """
    grid = k.grid
    if r.grid != grid:
        raise GridMismatch("invariants and coefficients must share a grid")
    if r.r3 is None:
        raise ValueError("cone flows need all three coefficients")
    k0, k1, k2 = k.k0.values, k.k1.values, k.k2.values
    _require_positive(k0, "k0")
    r1, r2, r3 = r.r1.values, r.r2.values, r.r3.values
    L = grid.length

    def D(v):
        return spectral_derivative(v, L, 1)

    k0_t = D(r1) + r3 * k0
    n1 = (k1 * r1 + k2 * r2 + D(r3)) / k0
    n2 = (D(D(r2) / k0) + k2 * r1 - k1 * r2) / k0
    k1_t = D(n1) - k1 * r3 + (k2 / k0) * D(r2)
    k2_t = D(n2) - k2 * r3 - (k1 / k0) * D(r2)
    return (GridFunction(grid, k0_t), GridFunction(grid, k1_t),
            GridFunction(grid, k2_t))


# -- Poisson tensors ---------------------------------------------------------

@dataclass(frozen=True)
class PoissonTensor:
    """Matrix of periodic operators acting on invariant-direction tuples."""

    name: str
    grid: PeriodicGrid
    entries: tuple  # tuple of tuples of LinearPeriodicOperator
    coefficients: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.entries)

    def apply(self, fields) -> tuple:
        if len(fields) != self.size:
            raise GridMismatch(f"{self.name} expects {self.size} components",
                               got=len(fields))
        out = []
        for row in self.entries:
            acc = np.zeros(self.grid.n_points)
            for op, f in zip(row, fields):
                if f.grid != self.grid:
                    raise GridMismatch("field grid does not match tensor grid")
                if not isinstance(op, Zero):
                    acc = acc + apply_operator(op, f).values
            out.append(GridFunction(self.grid, acc))
        return tuple(out)

    def adjoint_residual(self, trials: int = 20, seed: int = 0) -> float:
        """Blockwise formal skew-adjointness: entry (i,j) adjoint vs -(j,i).

        Measured as |<g, A_ij f> + <A_ji g, f>| / (|f| |g|) over random
        band-limited pairs; the max over blocks and trials is returned.
        """
        rng = np.random.default_rng(seed)
        n, L = self.grid.n_points, self.grid.length
        worst = 0.0
        for _ in range(trials):
            f = GridFunction(self.grid, band_limited(rng, n))
            g = GridFunction(self.grid, band_limited(rng, n))
            nf = np.sqrt(quadrature(f.values ** 2, L))
            ng = np.sqrt(quadrature(g.values ** 2, L))
            for i in range(self.size):
                for j in range(self.size):
                    a = quadrature(g.values * apply_operator(self.entries[i][j], f).values, L)
                    b = quadrature(apply_operator(self.entries[j][i], g).values * f.values, L)
                    worst = max(worst, abs(a + b) / (nf * ng))
        return worst


def make_P(k1: GridFunction, k2: GridFunction) -> PoissonTensor:
    """The 2x2 tensor on (k1, k2) at arc-length parametrization."""
    if k1.grid != k2.grid:
        raise GridMismatch("coefficient grids differ")
    D, D3 = Deriv(1), Deriv(3)
    m1, m2 = Mult(k1), Mult(k2)
    off = D @ m2 + m2 @ D
    entries = ((-1.0 * D3 + m1 @ D + D @ m1, off),
               (off, D3 - D @ m1 - m1 @ D))
    return PoissonTensor("P", k1.grid, entries, {"k1": k1, "k2": k2})


def make_P_general(k: ConeInvariants) -> PoissonTensor:
    """The reduced 3x3 tensor for general k0: zero first row/column, lower
    block built from D(1/k0)D(1/k0)D and the k_i/k0 first-order pieces.
    At k0 = 1 the lower block equals P entrywise as operators."""
    grid = k.grid
    _require_positive(k.k0.values, "k0")
    inv = GridFunction(grid, 1.0 / k.k0.values)
    q1 = GridFunction(grid, k.k1.values / k.k0.values)
    q2 = GridFunction(grid, k.k2.values / k.k0.values)
    D = Deriv(1)
    triple = D @ Mult(inv) @ D @ Mult(inv) @ D
    a = D @ Mult(q1) + Mult(q1) @ D
    b = D @ Mult(q2) + Mult(q2) @ D
    z = Zero()
    entries = ((z, z, z),
               (z, -1.0 * triple + a, b),
               (z, b, triple - a))
    return PoissonTensor("P_gen", grid, entries,
                         {"k0": k.k0, "k1": k.k1, "k2": k.k2})


def make_Q0(k0: GridFunction) -> PoissonTensor:
    """Second structure: (1/2) diag(0, -D(1/k0)-(1/k0)D, D(1/k0)+(1/k0)D).

    The 1/2 makes the k0 = 1 restriction exactly diag(-D, D)."""
    grid = k0.grid
    _require_positive(k0.values, "k0")
    inv = GridFunction(grid, 1.0 / k0.values)
    D = Deriv(1)
    core = D @ Mult(inv) + Mult(inv) @ D
    z = Zero()
    entries = ((z, z, z),
               (z, -0.5 * core, z),
               (z, z, 0.5 * core))
    return PoissonTensor("Q0_gen", grid, entries, {"k0": k0})


def apply_P(k: ConeInvariants, rr) -> tuple:
    """Apply the arc-length tensor P built from (k1, k2) to a pair."""
    return make_P(k.k1, k.k2).apply(tuple(rr))


def apply_P_general(k: ConeInvariants, hh) -> tuple:
    """Apply the general-k0 3x3 tensor to a triple (k0, k1, k2 directions)."""
    return make_P_general(k).apply(tuple(hh))


def apply_Q0(k0: GridFunction, hh) -> tuple:
    """Apply the second structure to a triple."""
    return make_Q0(k0).apply(tuple(hh))


# -- the coupled KdV system --------------------------------------------------

def kdv_rhs(k1: GridFunction, k2: GridFunction) -> tuple:
    """RHS of the complexly coupled KdV system:
    (-k1''' + 3 k1 k1' + 3 k2 k2',  k2''' + k1' k2 - k1 k2')."""
    if k1.grid != k2.grid:
        raise GridMismatch("k1 and k2 live on different grids")
    L = k1.grid.length
    a, b = k1.values, k2.values
    ap = spectral_derivative(a, L, 1)
    bp = spectral_derivative(b, L, 1)
    ap3 = spectral_derivative(a, L, 3)
    bp3 = spectral_derivative(b, L, 3)
    return (GridFunction(k1.grid, -ap3 + 3.0 * a * ap + 3.0 * b * bp),
            GridFunction(k1.grid, bp3 + ap * b - a * bp))


def hamiltonian_h(k: ConeInvariants) -> float:
    """h = 1/2 int (k1^2 + k2^2) dx."""
    return 0.5 * quadrature(k.k1.values ** 2 + k.k2.values ** 2, k.grid.length)


def gradient_h(k: ConeInvariants) -> tuple:
    """Variational derivative of h: just (k1, k2)."""
    return (k.k1, k.k2)


@dataclass(frozen=True)
class HamiltonianFunctional:
    """A functional of the invariants with its variational gradient."""

    name: str
    evaluate: Callable[[ConeInvariants], float]
    gradient: Callable[[ConeInvariants], tuple]


def h_functional() -> HamiltonianFunctional:
    return HamiltonianFunctional("h", hamiltonian_h, gradient_h)


def gradient_consistency(fun: HamiltonianFunctional, k: ConeInvariants,
                         trials: int = 5, seed: int = 0,
                         eps: float = 1e-6) -> float:
    """max over random band-limited directions of the defect between the
    finite-difference directional derivative and <gradient, delta>."""
    rng = np.random.default_rng(seed)
    grid = k.grid
    worst = 0.0
    for _ in range(trials):
        d1 = band_limited(rng, grid.n_points)
        d2 = band_limited(rng, grid.n_points)
        kp = ConeInvariants(k.k0, GridFunction(grid, k.k1.values + eps * d1),
                            GridFunction(grid, k.k2.values + eps * d2))
        km = ConeInvariants(k.k0, GridFunction(grid, k.k1.values - eps * d1),
                            GridFunction(grid, k.k2.values - eps * d2))
        fd = (fun.evaluate(kp) - fun.evaluate(km)) / (2.0 * eps)
        g1, g2 = fun.gradient(k)
        inner = quadrature(g1.values * d1 + g2.values * d2, grid.length)
        worst = max(worst, abs(fd - inner))
    return worst
