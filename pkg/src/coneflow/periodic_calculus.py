"""Uniform periodic grids, spectral/fd4 calculus, and operator trees.

The raw helpers (`spectral_derivative`, `fd4_derivative`, `quadrature`,
`resample_values`, `trig_interp_eval`, `antiderivative_eval`) act on plain
arrays along axis 0 and are what the geometry modules call in hot paths.
The GridFunction layer on top matches the public toolkit API, and
LinearPeriodicOperator provides the composable alphabet (D, constants,
multiplication) that the Poisson tensors are assembled from.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, UnresolvedSpectrum


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid x_j = j L / N on a circle of circumference L."""

    n_points: int
    length: float

    def __post_init__(self):
        if self.n_points < 16 or self.n_points % 2 != 0:
            raise ValueError(f"n_points must be even and >= 16, got {self.n_points}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * (self.length / self.n_points)

    @property
    def spacing(self) -> float:
        return self.length / self.n_points


@dataclass(frozen=True)
class GridFunction:
    """Real scalar field sampled on a PeriodicGrid."""

    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(f"values shape {vals.shape} does not match grid "
                             f"({self.grid.n_points},)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: PeriodicGrid, fn) -> "GridFunction":
        return cls(grid, fn(grid.nodes))


def _require_same_grid(a: PeriodicGrid, b: PeriodicGrid):
    if a != b:
        raise GridMismatch("objects live on different grids",
                           left=(a.n_points, a.length), right=(b.n_points, b.length))


# -- raw array helpers (axis 0 = x) -----------------------------------------

def spectral_derivative(values: np.ndarray, length: float, order: int = 1,
                        axis: int = 0) -> np.ndarray:
    """Fourier derivative; Nyquist mode zeroed for odd orders (reality)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    freq = np.fft.rfftfreq(n, d=length / n) * 2 * np.pi
    mult = (1j * freq) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0
    fk = np.fft.rfft(values, axis=axis)
    shape = [1] * values.ndim
    shape[axis] = -1
    return np.fft.irfft(fk * mult.reshape(shape), n=n, axis=axis)


_FD4 = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, (-2, -1, 0, 1, 2)),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, (-2, -1, 0, 1, 2)),
    3: (np.array([1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0]) / 8.0,
        (-3, -2, -1, 0, 1, 2, 3)),
}


def fd4_derivative(values: np.ndarray, length: float, order: int = 1,
                   axis: int = 0) -> np.ndarray:
    """4th-order centered differences with periodic wrap."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    h = length / n
    coeffs, offsets = _FD4[order]
    out = np.zeros_like(values)
    for c, m in zip(coeffs, offsets):
        if c != 0.0:
            out += c * np.roll(values, -m, axis=axis)
    return out / h ** order


def quadrature(values: np.ndarray, length: float, axis: int = 0) -> float:
    """Trapezoidal rule on the periodic grid: (L/N) * sum."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    return values.sum(axis=axis) * (length / n)


def resample_values(values: np.ndarray, n_new: int, axis: int = 0) -> np.ndarray:
    """Trigonometric resampling to n_new nodes via zero padding/truncation."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    fk = np.fft.rfft(values, axis=axis)
    n_half = n_new // 2 + 1
    shape = list(fk.shape)
    shape[axis] = n_half
    out = np.zeros(shape, dtype=complex)
    take = min(fk.shape[axis], n_half)
    src = [slice(None)] * fk.ndim
    dst = [slice(None)] * fk.ndim
    src[axis] = slice(0, take)
    dst[axis] = slice(0, take)
    out[tuple(dst)] = fk[tuple(src)]
    if n % 2 == 0 and n_new > n:
        # upsampling duplicates the even-grid Nyquist mode; split it
        nyq = [slice(None)] * fk.ndim
        nyq[axis] = n // 2
        out[tuple(nyq)] *= 0.5
    return np.fft.irfft(out, n=n_new, axis=axis) * (n_new / n)


def trig_interp_eval(values: np.ndarray, length: float,
                     points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant at arbitrary points.

    values may be (N,) or (N, k); returns (M,) or (M, k).
    """
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    n = values.shape[0]
    ch = np.fft.rfft(values, axis=0) / n
    kk = np.arange(ch.shape[0]) * 2 * np.pi / length
    weight = np.full(ch.shape[0], 2.0)
    weight[0] = 1.0
    if n % 2 == 0:
        weight[-1] = 1.0
    phases = np.exp(1j * points[:, None] * kk[None, :])
    if values.ndim == 1:
        return (phases * (weight * ch)).real.sum(axis=1)
    return np.einsum("mk,k,kj->mj", phases, weight, ch).real


def antiderivative_eval(values: np.ndarray, length: float,
                        points: np.ndarray) -> np.ndarray:
    """F(x) = int_0^x f of the trig interpolant, at arbitrary points.

    F(x) = mean * x + sum_k w_k Re[(c_k / (i k)) (e^{ikx} - 1)].
    """
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    n = values.shape[0]
    ch = np.fft.rfft(values) / n
    out = ch[0].real * points
    kk = np.arange(1, ch.shape[0]) * 2 * np.pi / length
    weight = np.full(ch.shape[0] - 1, 2.0)
    if n % 2 == 0:
        weight[-1] = 1.0
    phases = np.exp(1j * points[:, None] * kk[None, :]) - 1.0
    out = out + (phases * (weight * ch[1:] / (1j * kk))).real.sum(axis=1)
    return out


def band_limited(rng: np.random.Generator, n: int, n_modes: int = 8,
                 amplitude: float = 1.0) -> np.ndarray:
    """Random real field supported on Fourier modes 1..n_modes."""
    coef = np.zeros(n // 2 + 1, dtype=complex)
    coef[1:n_modes + 1] = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    f = np.fft.irfft(coef, n=n)
    peak = np.max(np.abs(f))
    return f * (amplitude / peak) if peak > 0 else f


def _check_resolution(values: np.ndarray, rel: float = 1e-8):
    fk = np.abs(np.fft.rfft(values, axis=0)) ** 2
    total = fk.sum()
    if total == 0:
        return
    top = fk[2 * fk.shape[0] // 3:].sum()
    if top > rel * total:
        warnings.warn(UnresolvedSpectrum(
            f"top-third spectral energy fraction {top / total:.2e} exceeds {rel:.0e}"))


# -- GridFunction API --------------------------------------------------------

def derivative(f: GridFunction, order: int = 1, method: str = "spectral") -> GridFunction:
    """Differentiate a GridFunction; spectral is exact for resolved data."""
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    if method == "spectral":
        _check_resolution(f.values)
        out = spectral_derivative(f.values, f.grid.length, order)
    elif method == "fd4":
        out = fd4_derivative(f.values, f.grid.length, order)
    else:
        raise ValueError(f"unknown method {method!r}")
    return GridFunction(f.grid, out)


def integrate(f: GridFunction) -> float:
    return float(quadrature(f.values, f.grid.length))


def resample(f: GridFunction, n_new: int) -> GridFunction:
    return GridFunction(PeriodicGrid(n_new, f.grid.length),
                        resample_values(f.values, n_new))


# -- linear periodic operators ------------------------------------------------

class LinearPeriodicOperator:
    """Composable linear operator on periodic scalar fields.

    Trees are built from Deriv, Mult, Identity and Zero leaves with
    ``+``, ``-``, scalar ``*`` and ``@`` (composition). Immutable.
    """

    def apply(self, f: GridFunction, method: str = "spectral") -> GridFunction:
        grid = self.grid()
        if grid is not None:
            _require_same_grid(grid, f.grid)
        return GridFunction(f.grid, self._apply(f.values, f.grid, method))

    def _apply(self, values, grid, method):
        raise NotImplementedError

    def grid(self):
        """The grid pinned by Mult leaves, or None for grid-free trees."""
        return None

    def __add__(self, other):
        return _Sum(self, other)

    def __sub__(self, other):
        return _Sum(self, _Scaled(-1.0, other))

    def __neg__(self):
        return _Scaled(-1.0, self)

    def __mul__(self, c):
        return _Scaled(float(c), self)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return _Compose(self, other)


def _deriv_values(values, grid, order, method):
    if method == "spectral":
        return spectral_derivative(values, grid.length, order)
    if method == "fd4":
        return fd4_derivative(values, grid.length, order)
    raise ValueError(f"unknown method {method!r}")


class Deriv(LinearPeriodicOperator):
    def __init__(self, order: int = 1):
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        self.order = order

    def _apply(self, values, grid, method):
        return _deriv_values(values, grid, self.order, method)


class Mult(LinearPeriodicOperator):
    def __init__(self, f: GridFunction):
        self.f = f

    def grid(self):
        return self.f.grid

    def _apply(self, values, grid, method):
        return self.f.values * values


class Identity(LinearPeriodicOperator):
    def _apply(self, values, grid, method):
        return values.copy()


class Zero(LinearPeriodicOperator):
    def _apply(self, values, grid, method):
        return np.zeros_like(values)


class _Scaled(LinearPeriodicOperator):
    def __init__(self, c: float, op: LinearPeriodicOperator):
        self.c = c
        self.op = op

    def grid(self):
        return self.op.grid()

    def _apply(self, values, grid, method):
        return self.c * self.op._apply(values, grid, method)


class _Sum(LinearPeriodicOperator):
    def __init__(self, a, b):
        self.a = a
        self.b = b
        ga, gb = a.grid(), b.grid()
        if ga is not None and gb is not None:
            _require_same_grid(ga, gb)

    def grid(self):
        return self.a.grid() or self.b.grid()

    def _apply(self, values, grid, method):
        return self.a._apply(values, grid, method) + self.b._apply(values, grid, method)


class _Compose(LinearPeriodicOperator):
    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner
        ga, gb = outer.grid(), inner.grid()
        if ga is not None and gb is not None:
            _require_same_grid(ga, gb)

    def grid(self):
        return self.outer.grid() or self.inner.grid()

    def _apply(self, values, grid, method):
        return self.outer._apply(self.inner._apply(values, grid, method), grid, method)


def apply_operator(op: LinearPeriodicOperator, f: GridFunction,
                   method: str = "spectral") -> GridFunction:
    return op.apply(f, method=method)


def adjoint_residual(op: LinearPeriodicOperator, trials: int = 20, seed: int = 0,
                     grid: PeriodicGrid | None = None, n_modes: int = 8) -> float:
    """max over random band-limited f, g of |<f, Op g> + <Op f, g>| / (|f||g|).

    Zero (to roundoff) exactly when op is formally skew-adjoint.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = grid or op.grid()
    if grid is None:
        raise ValueError("operator has no Mult leaf; pass grid explicitly")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = GridFunction(grid, band_limited(rng, grid.n_points, n_modes))
        g = GridFunction(grid, band_limited(rng, grid.n_points, n_modes))
        opg = op.apply(g).values
        opf = op.apply(f).values
        num = abs(quadrature(f.values * opg, grid.length)
                  + quadrature(opf * g.values, grid.length))
        den = (np.sqrt(quadrature(f.values ** 2, grid.length))
               * np.sqrt(quadrature(g.values ** 2, grid.length)))
        worst = max(worst, num / den)
    return worst
