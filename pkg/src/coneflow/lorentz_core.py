"""Minkowski R^4, the Lorentz group O(3,1), and its parabolic factorization.

Conventions. The metric is

    J = [[ 0, 0, 0,-1],
         [ 0, 1, 0, 0],
         [ 0, 0, 1, 0],
         [-1, 0, 0, 0]],

so <u,v>_J = -u0 v3 - u3 v0 + u1 v1 + u2 v2 and the light cone is
<u,u>_J = 0, i.e. ||(u1,u2)||^2 = 2 u0 u3. Group elements Theta satisfy
Theta^T J Theta = J, hence Theta^-1 = J Theta^T J. Algebra elements have
the block shape

    X = [[ a, z^T,  0],
         [ w,  B,   z],
         [ 0, w^T, -a]],       B 2x2 skew,

parametrized here by (a, w, z, b) with B = [[0, b], [-b, 0]].

Group elements near the identity factor as g = g1(xi) g0(alpha, A) gm1(v)
with

    gm1(v) = [[1, v^T, ||v||^2/2], [0, I, v], [0, 0, 1]],
    g0     = diag(alpha, A, 1/alpha),
    g1(xi) = [[1, 0, 0], [xi, I, 0], [||xi||^2/2, xi^T, 1]].

All functions accept single elements or leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ChartBreakdown

J = np.zeros((4, 4))
J[0, 3] = J[3, 0] = -1.0
J[1, 1] = J[2, 2] = 1.0
J.flags.writeable = False

E4 = np.array([0.0, 0.0, 0.0, 1.0])
E4.flags.writeable = False


def minkowski_inner(u, v):
    """<u,v>_J = -u0 v3 - u3 v0 + u1 v1 + u2 v2, batched over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (-u[..., 0] * v[..., 3] - u[..., 3] * v[..., 0]
            + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2])


def cone_residual(u):
    """|<u,u>_J|; zero exactly when u lies on the light cone."""
    return np.abs(minkowski_inner(u, u))


def lorentz_residual(theta) -> float:
    """max |Theta^T J Theta - J|, the group-membership defect."""
    theta = np.asarray(theta, dtype=float)
    prod = np.swapaxes(theta, -1, -2) @ J @ theta
    return float(np.max(np.abs(prod - J)))


def lorentz_inverse(theta):
    """Theta^-1 = J Theta^T J, valid for exact group elements."""
    theta = np.asarray(theta, dtype=float)
    return J @ np.swapaxes(theta, -1, -2) @ J


@dataclass(frozen=True)
class GroupFactors:
    """Parabolic factors (alpha, A, v, xi) of g = g1(xi) g0(alpha,A) gm1(v).

    alpha has shape (...), A (..., 2, 2), v and xi (..., 2); a shared
    leading batch shape holds per-node factors of a frame field.
    """

    alpha: np.ndarray
    A: np.ndarray
    v: np.ndarray
    xi: np.ndarray


def compose_factors(factors: GroupFactors) -> np.ndarray:
    """Assemble g1(xi) g0(alpha, A) gm1(v) as explicit 4x4 blocks."""
    alpha = np.asarray(factors.alpha, dtype=float)
    A = np.asarray(factors.A, dtype=float)
    v = np.asarray(factors.v, dtype=float)
    xi = np.asarray(factors.xi, dtype=float)
    batch = alpha.shape

    gm = np.zeros(batch + (4, 4))
    gm[..., 0, 0] = 1.0
    gm[..., 0, 1:3] = v
    gm[..., 0, 3] = 0.5 * (v * v).sum(axis=-1)
    gm[..., 1, 1] = gm[..., 2, 2] = 1.0
    gm[..., 1:3, 3] = v
    gm[..., 3, 3] = 1.0

    g0 = np.zeros(batch + (4, 4))
    g0[..., 0, 0] = alpha
    g0[..., 1:3, 1:3] = A
    g0[..., 3, 3] = 1.0 / alpha

    g1 = np.zeros(batch + (4, 4))
    g1[..., 0, 0] = 1.0
    g1[..., 1, 1] = g1[..., 2, 2] = 1.0
    g1[..., 1:3, 0] = xi
    g1[..., 3, 0] = 0.5 * (xi * xi).sum(axis=-1)
    g1[..., 3, 1:3] = xi
    g1[..., 3, 3] = 1.0

    return g1 @ g0 @ gm


def factor(theta, eps: float = 1e-12) -> GroupFactors:
    """Extract (alpha, A, v, xi) with g1(xi) g0(alpha,A) gm1(v) = theta.

    The chart requires the pivot alpha = theta[0,0] to be nonzero; a
    vanishing pivot raises ChartBreakdown rather than returning NaNs.
    """
    theta = np.asarray(theta, dtype=float)
    alpha = theta[..., 0, 0]
    if np.any(np.abs(alpha) < eps):
        idx = np.argwhere(np.abs(np.atleast_1d(alpha)) < eps)
        raise ChartBreakdown("factorization pivot vanished",
                             index=idx[0].tolist(), pivot=float(np.min(np.abs(alpha))))
    v = theta[..., 0, 1:3] / alpha[..., None]
    xi = theta[..., 1:3, 0] / alpha[..., None]
    A = theta[..., 1:3, 1:3] - (theta[..., 1:3, 0:1] * theta[..., 0:1, 1:3]) / alpha[..., None, None]
    return GroupFactors(alpha=alpha, A=A, v=v, xi=xi)


def make_algebra(a, w, z, b) -> np.ndarray:
    """Assemble the algebra element with parameters (a, w, z, b)."""
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    b = np.asarray(b, dtype=float)
    X = np.zeros(a.shape + (4, 4))
    X[..., 0, 0] = a
    X[..., 3, 3] = -a
    X[..., 0, 1:3] = z
    X[..., 1:3, 3] = z
    X[..., 1:3, 0] = w
    X[..., 3, 1:3] = w
    X[..., 1, 2] = b
    X[..., 2, 1] = -b
    return X


def algebra_residual(X) -> float:
    """max |X^T J + J X|; zero on the Lorentz algebra."""
    X = np.asarray(X, dtype=float)
    return float(np.max(np.abs(np.swapaxes(X, -1, -2) @ J + J @ X)))


def project_algebra(X):
    """Nearest algebra-shaped element and the projection defect.

    Averages the entries tied by the block shape and zeroes the rest;
    returns (projected, max |X - projected|).
    """
    X = np.asarray(X, dtype=float)
    a = 0.5 * (X[..., 0, 0] - X[..., 3, 3])
    z = 0.5 * (X[..., 0, 1:3] + X[..., 1:3, 3])
    w = 0.5 * (X[..., 1:3, 0] + X[..., 3, 1:3])
    b = 0.5 * (X[..., 1, 2] - X[..., 2, 1])
    Xp = make_algebra(a, w, z, b)
    return Xp, float(np.max(np.abs(X - Xp)))


def exp_algebra(X) -> np.ndarray:
    """Matrix exponential of an algebra element (lands in O(3,1))."""
    return expm(np.asarray(X, dtype=float))


def random_algebra(seed: int, scale: float) -> np.ndarray:
    """Algebra element with the six parameters uniform in [-scale, scale]."""
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-scale, scale, 2)
    w = rng.uniform(-scale, scale, 2)
    z = rng.uniform(-scale, scale, 2)
    return make_algebra(a, w, z, b)


def random_lorentz(seed: int, scale: float) -> np.ndarray:
    """exp of a random algebra element; deterministic per seed."""
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    return exp_algebra(random_algebra(seed, scale))


def apply_lorentz(theta, u):
    """Theta acting on Minkowski vectors, batched over nodes."""
    theta = np.asarray(theta, dtype=float)
    u = np.asarray(u, dtype=float)
    return u @ np.swapaxes(theta, -1, -2)
