"""Pressure laws, enthalpy, and the quadratic Taylor remainder of the
enthalpy around a background density."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from .spectral import Field

__all__ = [
    "PressureLaw",
    "GammaLaw",
    "TabulatedLaw",
    "FluidParams",
    "enthalpy",
    "enthalpy_prime",
    "enthalpy_second",
    "remainder",
]


class PressureLaw:
    """Base class; subclasses provide p and its first three derivatives."""

    def p(self, z):
        raise NotImplementedError

    def dp(self, z):
        raise NotImplementedError

    # h(z) = int_1^z p'(s)/s ds; default is adaptive quadrature per point.
    def h(self, z):
        z = np.asarray(z, dtype=float)
        flat = z.ravel()
        out = np.array([quad(lambda s: self.dp(s) / s, 1.0, zi)[0] for zi in flat])
        return out.reshape(z.shape) if z.shape else float(out[0])

    def h_prime(self, z):
        return self.dp(z) / z

    def h_second(self, z):
        raise NotImplementedError


@dataclass(frozen=True)
class GammaLaw(PressureLaw):
    """p(rho) = rho^gamma with gamma >= 1; closed-form enthalpy."""

    gamma: float = 2.0

    def __post_init__(self):
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")

    def p(self, z):
        return np.asarray(z, dtype=float) ** self.gamma

    def dp(self, z):
        g = self.gamma
        return g * np.asarray(z, dtype=float) ** (g - 1.0)

    def h(self, z):
        z = np.asarray(z, dtype=float)
        g = self.gamma
        if np.isclose(g, 1.0):
            return np.log(z)
        return g / (g - 1.0) * (z ** (g - 1.0) - 1.0)

    def h_prime(self, z):
        return self.gamma * np.asarray(z, dtype=float) ** (self.gamma - 2.0)

    def h_second(self, z):
        g = self.gamma
        return g * (g - 2.0) * np.asarray(z, dtype=float) ** (g - 3.0)


@dataclass(frozen=True)
class TabulatedLaw(PressureLaw):
    """User-supplied smooth law given by callables for p and derivatives."""

    p_fn: object
    dp_fn: object
    d2p_fn: object = None

    def p(self, z):
        return self.p_fn(np.asarray(z, dtype=float))

    def dp(self, z):
        return self.dp_fn(np.asarray(z, dtype=float))

    def h_second(self, z):
        # h'(z) = p'(z)/z  =>  h''(z) = p''(z)/z - p'(z)/z^2
        if self.d2p_fn is None:
            raise ValueError("second derivative of pressure not supplied")
        z = np.asarray(z, dtype=float)
        return self.d2p_fn(z) / z - self.dp_fn(z) / z ** 2


@dataclass(frozen=True)
class FluidParams:
    """Pressure law, viscosities and reference density."""

    law: PressureLaw = dc_field(default_factory=GammaLaw)
    mu: float = 1.0
    mu_prime: float = 0.0
    rho_bar: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("shear viscosity mu must be positive")
        if self.mu_prime + 2.0 * self.mu / 3.0 < 0:
            raise ValueError("viscosity condition mu' + 2 mu / 3 >= 0 violated")
        if not self.rho_bar > 0:
            raise ValueError("reference density must be positive")

    @property
    def nu(self):
        """Longitudinal kinematic viscosity (2 mu + mu') / rho_bar."""
        return (2.0 * self.mu + self.mu_prime) / self.rho_bar

    @property
    def h_prime_bar(self):
        return float(self.law.h_prime(self.rho_bar))

    def check_pressure_monotone(self, lo, hi, samples=256):
        z = np.linspace(lo, hi, samples)
        if np.any(self.law.dp(z) <= 0):
            raise ValueError(f"p'(rho) not positive on [{lo}, {hi}]")


def _check_positive(z, what="density"):
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        idx = np.unravel_index(int(np.argmin(z)), z.shape) if z.ndim else ()
        raise ValueError(f"nonpositive {what} (min {z.min():.6g} at index {idx})")
    return z


def enthalpy(law: PressureLaw, z):
    z = _check_positive(z)
    return law.h(z)


def enthalpy_prime(law: PressureLaw, z):
    z = _check_positive(z)
    return law.h_prime(z)


def enthalpy_second(law: PressureLaw, z):
    z = _check_positive(z)
    return law.h_second(z)


_GL_NODES, _GL_WEIGHTS = leggauss(16)


def _remainder_quadrature(law, rho_s, total):
    """16-node Gauss-Legendre for int_{rho_s}^{total} h''(s) (total - s) ds."""
    half = 0.5 * (total - rho_s)
    mid = 0.5 * (total + rho_s)
    acc = np.zeros_like(np.asarray(total, dtype=float))
    for x, w in zip(_GL_NODES, _GL_WEIGHTS):
        s = mid + half * x
        acc = acc + w * law.h_second(s) * (total - s)
    return half * acc


def _remainder_gamma(gamma, rho_s, total):
    """Closed form of the remainder integral for gamma-law gases."""
    g = gamma
    c = g * (g - 2.0)
    if np.isclose(g, 2.0):
        return np.zeros_like(np.asarray(total, dtype=float))
    if np.isclose(g, 1.0):
        # h''(s) = -1/s^2
        ratio = total / rho_s
        return -(ratio - 1.0 - np.log(ratio))
    if np.isclose(g, 3.0):
        # h''(s) = 3
        return 1.5 * (total - rho_s) ** 2
    a, z = rho_s, total
    term1 = z * (z ** (g - 2.0) - a ** (g - 2.0)) / (g - 2.0)
    term2 = (z ** (g - 1.0) - a ** (g - 1.0)) / (g - 1.0)
    return c * (term1 - term2)


def remainder(law: PressureLaw, pert: Field, rho_s: Field) -> Field:
    """Second-order Taylor residue of h around rho_s:

        R = int_{rho_s}^{pert + rho_s} h''(s) (pert + rho_s - s) ds

    so that h(pert + rho_s) = h(rho_s) + h'(rho_s) pert + R exactly.
    Closed form for gamma laws, fixed-order Gauss quadrature otherwise.
    """
    total = pert.values + rho_s.values
    _check_positive(total, "total density")
    if isinstance(law, GammaLaw):
        vals = _remainder_gamma(law.gamma, rho_s.values, total)
    else:
        vals = _remainder_quadrature(law, rho_s.values, total)
    return Field(pert.grid, vals)
