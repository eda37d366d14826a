"""Periodic pseudo-spectral toolkit: grids, fields, Fourier multipliers, norms.

All fields live on the uniform torus [0, L)^dim.  Spectra are stored as the
Fourier-series coefficients c_k with f(x) = sum_k c_k exp(i k.x), i.e. the
raw FFT divided by the number of grid points, so that the L^2 Parseval
identity reads ||f||^2 = L^dim * sum |c_k|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import isclose

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "MultiplierNorm",
    "MeanZeroError",
    "transform",
    "inverse_transform",
    "apply_multiplier",
    "frac_derivative",
    "gradient",
    "divergence",
    "laplacian",
    "inverse_laplacian",
    "poisson_gradient",
    "lp_norm",
    "grad_norm",
    "sobolev_norm",
    "norm",
    "gn_interpolation_check",
    "dealias",
    "dealias_product",
]


class MeanZeroError(ValueError):
    """Raised when a singular multiplier or negative-order norm meets a
    field with a nonzero mean."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus [0, L)^dim with n points per axis."""

    dim: int
    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError("box length must be positive")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def dx(self):
        return self.length / self.n

    @property
    def npoints(self):
        return self.n ** self.dim

    @property
    def cell_volume(self):
        return self.dx ** self.dim

    def axes(self):
        """Physical coordinates along one axis."""
        return np.arange(self.n) * self.dx

    def coords(self):
        """Meshgrid of physical coordinates, shape (dim, n, ..., n)."""
        ax = self.axes()
        return np.stack(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def wavevectors(self):
        """Wavevector components k = (2 pi / L) m, shape (dim, n, ..., n)."""
        return _wavevectors(self.dim, self.n, self.length)

    def wavenumber_magnitude(self):
        return _kmag(self.dim, self.n, self.length)

    def mode_numbers(self):
        """Integer mode numbers m per axis, shape (dim, n, ..., n)."""
        return _modes(self.dim, self.n)


@lru_cache(maxsize=32)
def _modes(dim, n):
    m = np.fft.fftfreq(n, d=1.0 / n)
    return np.stack(np.meshgrid(*([m] * dim), indexing="ij"))


@lru_cache(maxsize=32)
def _wavevectors(dim, n, length):
    return (2.0 * np.pi / length) * _modes(dim, n)


@lru_cache(maxsize=32)
def _kmag(dim, n, length):
    k = _wavevectors(dim, n, length)
    return np.sqrt(np.sum(k * k, axis=0))


@lru_cache(maxsize=32)
def _dealias_mask(dim, n):
    # 2/3 rule: keep |m| <= n/3 on every axis.
    m = np.abs(np.fft.fftfreq(n, d=1.0 / n))
    keep1 = m <= n / 3.0
    mask = keep1
    for _ in range(dim - 1):
        mask = np.multiply.outer(mask, keep1)
    return mask


@dataclass
class Field:
    """Real scalar or vector samples on a grid.

    Vector fields carry the component axis first: values.shape is either
    grid.shape or (ncomp,) + grid.shape.  The spectrum is cached lazily.
    """

    grid: Grid
    values: np.ndarray
    _spectrum: np.ndarray | None = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        shape = self.values.shape
        if shape == self.grid.shape:
            pass
        elif len(shape) == self.grid.dim + 1 and shape[1:] == self.grid.shape:
            pass
        else:
            raise ValueError(
                f"values shape {shape} incompatible with grid shape {self.grid.shape}"
            )

    @property
    def is_vector(self):
        return self.values.ndim == self.grid.dim + 1

    @property
    def ncomp(self):
        return self.values.shape[0] if self.is_vector else 1

    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = transform(self)
        return self._spectrum

    def mean(self):
        if self.is_vector:
            return self.values.reshape(self.ncomp, -1).mean(axis=1)
        return float(self.values.mean())

    def component(self, i):
        if not self.is_vector:
            raise ValueError("scalar field has no components")
        return Field(self.grid, self.values[i])

    def __add__(self, other):
        return Field(self.grid, self.values + _values_of(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _values_of(other))

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def _values_of(other):
    return other.values if isinstance(other, Field) else other


def transform(f: Field) -> np.ndarray:
    """Discrete Fourier coefficients of a field (normalized by 1/n^dim)."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("non-finite values in field")
    axes = tuple(range(-f.grid.dim, 0))
    return np.fft.fftn(f.values, axes=axes) / f.grid.npoints


def inverse_transform(grid: Grid, coeffs: np.ndarray) -> Field:
    """Physical field from Fourier coefficients (imaginary residue dropped)."""
    axes = tuple(range(-grid.dim, 0))
    vals = np.fft.ifftn(coeffs * grid.npoints, axes=axes)
    return Field(grid, np.ascontiguousarray(vals.real))


def _zero_mode_index(grid, ncomp):
    idx = (0,) * grid.dim
    return (slice(None),) + idx if ncomp > 1 else idx


def apply_multiplier(f: Field, symbol, name: str = "multiplier") -> Field:
    """Apply a scalar Fourier multiplier symbol(kvec) componentwise.

    symbol takes the (dim, n, ..., n) wavevector array and returns a scalar
    multiplier array.  A symbol that is singular at k = 0 is only admissible
    on mean-zero fields; the zero mode of the output is then set to zero.
    """
    k = f.grid.wavevectors()
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.asarray(symbol(k))
    spec = f.spectrum()
    bad = ~np.isfinite(sym)
    if bad.any():
        if not np.array_equal(np.argwhere(bad), np.zeros((1, f.grid.dim), dtype=int)):
            raise ValueError(f"{name} symbol non-finite away from k=0")
        _require_mean_zero(f, name)
        sym = sym.copy()
        sym[(0,) * f.grid.dim] = 0.0
    return inverse_transform(f.grid, spec * sym)


def _require_mean_zero(f, what):
    scale = float(np.max(np.abs(f.values))) or 1.0
    mean = np.atleast_1d(f.mean())
    if np.any(np.abs(mean) > 1e-13 * scale):
        raise MeanZeroError(f"mean-zero required for {what}")


def frac_derivative(f: Field, ell: float) -> Field:
    """|k|^ell multiplier; for ell < 0 requires a mean-zero field."""
    kmag = f.grid.wavenumber_magnitude()
    spec = f.spectrum()
    if ell < 0:
        _require_mean_zero(f, f"negative-order derivative |k|^{ell}")
    with np.errstate(divide="ignore"):
        sym = kmag ** ell
    if ell < 0:
        sym = sym.copy()
        sym[(0,) * f.grid.dim] = 0.0
    elif ell == 0:
        sym = np.ones_like(kmag)
    return inverse_transform(f.grid, spec * sym)


def gradient(f: Field) -> Field:
    """Exact spectral gradient; scalar -> vector field."""
    if f.is_vector:
        raise ValueError("gradient of a vector field not supported; use per component")
    k = f.grid.wavevectors()
    spec = f.spectrum()
    out = np.stack([spec * (1j * k[a]) for a in range(f.grid.dim)])
    return inverse_transform(f.grid, out)


def divergence(f: Field) -> Field:
    if not f.is_vector or f.ncomp != f.grid.dim:
        raise ValueError("divergence needs a dim-component vector field")
    k = f.grid.wavevectors()
    spec = f.spectrum()
    out = sum(spec[a] * (1j * k[a]) for a in range(f.grid.dim))
    return inverse_transform(f.grid, out)


def laplacian(f: Field) -> Field:
    k2 = f.grid.wavenumber_magnitude() ** 2
    return inverse_transform(f.grid, f.spectrum() * (-k2))


def inverse_laplacian(f: Field) -> Field:
    """Delta^{-1} on mean-zero fields (zero mode projected out)."""
    _require_mean_zero(f, "inverse Laplacian")
    k2 = f.grid.wavenumber_magnitude() ** 2
    with np.errstate(divide="ignore"):
        sym = -1.0 / k2
    sym = sym.copy()
    sym[(0,) * f.grid.dim] = 0.0
    return inverse_transform(f.grid, f.spectrum() * sym)


def poisson_gradient(f: Field) -> Field:
    """grad Delta^{-1} f for mean-zero scalar f (vector output)."""
    _require_mean_zero(f, "grad inverse Laplacian")
    g = f.grid
    k = g.wavevectors()
    k2 = g.wavenumber_magnitude() ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        base = np.where(k2 > 0, -1.0 / k2, 0.0)
    spec = f.spectrum()
    out = np.stack([spec * base * (1j * k[a]) for a in range(g.dim)])
    return inverse_transform(g, out)


def _pointwise_magnitude(f: Field):
    if f.is_vector:
        return np.sqrt(np.sum(f.values ** 2, axis=0))
    return np.abs(f.values)


def lp_norm(f: Field, p: float) -> float:
    """L^p norm by equal-weight grid quadrature; p may be inf."""
    mag = _pointwise_magnitude(f)
    if np.isinf(p):
        return float(mag.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(mag ** p) * f.grid.cell_volume) ** (1.0 / p))


def _mode_sum_sq(f: Field, ell: float) -> float:
    kmag = f.grid.wavenumber_magnitude()
    spec = f.spectrum()
    power = np.sum(np.abs(spec) ** 2, axis=0) if f.is_vector else np.abs(spec) ** 2
    if ell < 0:
        _require_mean_zero(f, f"norm of order {ell}")
    if ell == 0:
        w = np.ones_like(kmag)
    else:
        with np.errstate(divide="ignore"):
            w = kmag ** (2.0 * ell)
        w = w.copy()
        w[(0,) * f.grid.dim] = 0.0
    return float(f.grid.length ** f.grid.dim * np.sum(w * power))


def grad_norm(f: Field, ell: float) -> float:
    """||nabla^ell f||_{L^2} in multiplier form (ell real, possibly negative)."""
    return float(np.sqrt(_mode_sum_sq(f, ell)))


def sobolev_norm(f: Field, k: int, base_order: float = 0.0) -> float:
    """||nabla^base_order f||_{H^k} = (sum_{j<=k} ||nabla^{base_order+j} f||^2)^{1/2}."""
    if k < 0 or k != int(k):
        raise ValueError("sobolev index must be a nonnegative integer")
    total = sum(_mode_sum_sq(f, base_order + j) for j in range(int(k) + 1))
    return float(np.sqrt(total))


@dataclass(frozen=True)
class MultiplierNorm:
    """Norm specification: derivative order, Sobolev index, Lebesgue exponent."""

    order: float = 0.0
    sobolev_index: int = 0
    lebesgue_p: float = 2.0

    def __post_init__(self):
        if self.sobolev_index < 0:
            raise ValueError("sobolev_index must be nonnegative")
        if self.lebesgue_p < 1:
            raise ValueError("lebesgue_p must be in [1, inf]")


def norm(f: Field, spec: MultiplierNorm) -> float:
    """Evaluate the norm described by ``spec`` on a field."""
    if spec.lebesgue_p == 2:
        if spec.sobolev_index == 0:
            return grad_norm(f, spec.order)
        return sobolev_norm(f, spec.sobolev_index, base_order=spec.order)
    if spec.order != 0 or spec.sobolev_index != 0:
        raise ValueError("L^p quadrature norms support order 0 only")
    return lp_norm(f, spec.lebesgue_p)


def gn_interpolation_check(f: Field, alpha: float, beta: float, gamma: float,
                           p: float = 2.0):
    """Check the L^2 multiplier form of the Sobolev interpolation inequality.

    Returns (holds, ratio) where ratio = ||D^alpha f|| / (||D^beta f||^(1-theta)
    * ||D^gamma f||^theta).  In multiplier form the inequality holds with
    constant 1 by Hoelder on the mode sum.
    """
    if p != 2:
        raise ValueError("exact-multiplier variant requires p = 2")
    if isclose(beta, gamma):
        if not isclose(alpha, beta):
            raise ValueError("invalid interpolation triple")
        theta = 0.0
    else:
        theta = (alpha + 3.0 * (0.5 - 1.0 / p) - beta) / (gamma - beta)
    if theta < -1e-12 or theta > 1.0 + 1e-12:
        raise ValueError("invalid interpolation triple")
    theta = min(max(theta, 0.0), 1.0)
    lhs = grad_norm(f, alpha)
    rhs = grad_norm(f, beta) ** (1.0 - theta) * grad_norm(f, gamma) ** theta
    if rhs == 0.0:
        return True, 1.0 if lhs == 0.0 else np.inf
    ratio = lhs / rhs
    return ratio <= 1.0 + 1e-12, float(ratio)


def dealias(f: Field) -> Field:
    """Truncate a field to the 2/3-rule ball."""
    mask = _dealias_mask(f.grid.dim, f.grid.n)
    return inverse_transform(f.grid, f.spectrum() * mask)


def dealias_product(a: Field, b: Field) -> Field:
    """Pointwise product of scalar fields, truncated by the 2/3 rule."""
    return dealias(Field(a.grid, a.values * b.values))
