"""Exact per-wavenumber evolution of the constant-coefficient linearized
system and whole-space radial quadrature of its decay curves.

After a Hodge split, a Fourier mode of the linearized system reduces to a
2x2 block acting on (density, longitudinal velocity) plus an independent
scalar heat factor on the transverse velocity.  With xi = |k|, d the
longitudinal amplitude, hb = h'(rho_bar) and nu = (2 mu + mu') / rho_bar,
the block generator of the decaying flow d/dt (rho, d) = B (rho, d) is

    B(xi) = [[0,              -rho_bar xi ],
             [hb xi + 1/xi,   -nu xi^2    ]],

whose eigenvalues solve lambda^2 + nu xi^2 lambda + rho_bar (1 + hb xi^2) = 0.
The evolution matrix e^{tB} is the mode semigroup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .thermo import FluidParams

__all__ = [
    "ModeSymbol",
    "LinearDecayQuery",
    "QuadratureError",
    "FitResult",
    "mode_exponential",
    "expm2",
    "assemble_full_symbol",
    "evolve_full_symbol",
    "initial_profile",
    "decay_curve",
    "fit_exponent",
]


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModeSymbol:
    """Per-wavenumber data of the linear operator after Hodge splitting."""

    xi: float
    rho_bar: float
    h_prime_bar: float
    nu: float                  # (2 mu + mu') / rho_bar
    mu_over_rho: float         # mu / rho_bar

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive")

    @classmethod
    def from_params(cls, params: FluidParams, xi: float) -> "ModeSymbol":
        return cls(xi=xi, rho_bar=params.rho_bar,
                   h_prime_bar=params.h_prime_bar, nu=params.nu,
                   mu_over_rho=params.mu / params.rho_bar)

    @property
    def block(self) -> np.ndarray:
        """Generator of the decaying compressible flow (see module docstring)."""
        xi = self.xi
        return np.array([
            [0.0, -self.rho_bar * xi],
            [self.h_prime_bar * xi + 1.0 / xi, -self.nu * xi ** 2],
        ])

    @property
    def incompressible_rate(self) -> float:
        return self.mu_over_rho * self.xi ** 2


_COLLISION_REL = 1e-8
_COLLISION_ABS = 1e-12


def expm2(M: np.ndarray, t: float) -> np.ndarray:
    """Exact exponential exp(t M) of a real 2x2 matrix.

    Eigen-decomposition in closed form, with a Taylor fallback for the
    sinch factor when the eigenvalues (m +/- q) collide.
    """
    m = 0.5 * (M[0, 0] + M[1, 1])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    q = np.sqrt(complex(m * m - det))
    lam1, lam2 = m + q, m - q
    qt = q * t
    eye = np.eye(2)
    if abs(lam1 - lam2) < _COLLISION_REL * abs(lam1) + _COLLISION_ABS or \
            abs(qt) < 1e-6:
        # sinh(qt)/q = t (1 + (qt)^2/6 + (qt)^4/120 + ...)
        sinch = t * (1.0 + qt * qt / 6.0 + qt ** 4 / 120.0)
        cosh = 1.0 + qt * qt / 2.0 + qt ** 4 / 24.0
        E = np.exp(m * t) * (cosh * eye + sinch * (M - m * eye))
    else:
        # spectral projectors: each eigenvalue exponentiated on its own,
        # so a strongly damped branch underflows instead of overflowing
        e1, e2 = np.exp(lam1 * t), np.exp(lam2 * t)
        E = (e1 * (M - lam2 * eye) - e2 * (M - lam1 * eye)) / (lam1 - lam2)
    return np.ascontiguousarray(E.real)


def mode_exponential(sym: ModeSymbol, t: float):
    """Mode semigroup at time t: (2x2 compressible matrix, transverse scalar)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    E = expm2(sym.block, t)
    scalar = float(np.exp(-sym.incompressible_rate * t))
    return E, scalar


def assemble_full_symbol(params: FluidParams, kvec) -> np.ndarray:
    """Unsplit (1+d) x (1+d) Fourier symbol A(k) of the linear operator,
    acting on (rho_hat, u_hat); the evolution is exp(-t A)."""
    k = np.asarray(kvec, dtype=float)
    d = k.size
    k2 = float(k @ k)
    if k2 == 0.0:
        raise ValueError("full symbol undefined at k = 0 (Poisson term)")
    rb, hb = params.rho_bar, params.h_prime_bar
    A = np.zeros((1 + d, 1 + d), dtype=complex)
    A[0, 1:] = rb * 1j * k
    A[1:, 0] = 1j * k * (hb + 1.0 / k2)
    A[1:, 1:] = (params.mu * k2 * np.eye(d)
                 + (params.mu + params.mu_prime) * np.outer(k, k)) / rb
    return A


def evolve_full_symbol(params: FluidParams, kvec, t: float, state0):
    """Oracle evolution of one Fourier mode via the dense matrix exponential."""
    from scipy.linalg import expm
    A = assemble_full_symbol(params, kvec)
    return expm(-t * A) @ np.asarray(state0, dtype=complex)


def split_evolve_mode(params: FluidParams, kvec, t: float, state0):
    """Evolve (rho_hat, u_hat) for one mode through the Hodge split blocks."""
    k = np.asarray(kvec, dtype=float)
    xi = float(np.linalg.norm(k))
    state0 = np.asarray(state0, dtype=complex)
    rho0, u0 = state0[0], state0[1:]
    khat = k / xi
    dlong = 1j * (khat @ u0)           # Lambda^{-1} div u amplitude
    uperp = u0 - (khat @ u0) * khat
    sym = ModeSymbol.from_params(params, xi)
    E, scalar = mode_exponential(sym, t)
    rho_t = E[0, 0] * rho0 + E[0, 1] * dlong
    d_t = E[1, 0] * rho0 + E[1, 1] * dlong
    u_t = -1j * d_t * khat + scalar * uperp
    return np.concatenate(([rho_t], u_t))


# ---------------------------------------------------------------------------
# Whole-space decay curves by radial quadrature
# ---------------------------------------------------------------------------

def initial_profile(p: float = 1.0, name: str = "gaussian"):
    """Spectral surrogate profile for L^p initial data.

    p = 1 maps to a bounded smooth profile exp(-xi^2); p in (1, 2] maps to
    the critical low-frequency shaping xi^{-3 (1 - 1/p)} exp(-xi^2), the
    borderline Hausdorff-Young profile for L^p data.
    """
    if not 1.0 <= p <= 2.0:
        raise ValueError("initial-data index p must lie in [1, 2]")
    if name != "gaussian":
        raise ValueError(f"unknown profile preset {name!r}")
    s = 3.0 * (1.0 - 1.0 / p)

    def profile(xi):
        xi = np.asarray(xi, dtype=float)
        base = np.exp(-xi * xi)
        if s == 0.0:
            return base
        return xi ** (-s) * base

    return profile


@dataclass(frozen=True)
class LinearDecayQuery:
    """One decay-rate measurement of the linear semigroup."""

    ell: float = 0.0
    p: float = 1.0
    q: float = 2.0
    component: str = "velocity"          # "density" | "velocity"
    parts: str = "both"                  # "both" | "compressible" | "incompressible"
    profile_name: str = "gaussian"

    def __post_init__(self):
        if self.ell < 0:
            raise ValueError("derivative order ell must be nonnegative")
        if self.component not in ("density", "velocity"):
            raise ValueError("component must be 'density' or 'velocity'")
        if self.q not in (2.0, np.inf):
            raise ValueError("target index q must be 2 or inf")
        if self.parts not in ("both", "compressible", "incompressible"):
            raise ValueError("parts must be both/compressible/incompressible")

    def target_exponent(self) -> float:
        """Closed-formula decay exponent of the linear semigroup."""
        base = -1.5 * (1.0 / self.p - 1.0 / self.q) - 0.5 * self.ell
        if self.component == "density":
            base -= 0.5
        return base


def _radial_panels(xi_min=1e-6, xi_split=1.0, xi_max=8.0, n_low=24, n_high=8):
    edges = list(np.geomspace(xi_min, xi_split, n_low + 1))
    edges += list(np.linspace(xi_split, xi_max, n_high + 1))[1:]
    return edges


def _mode_amplitude_sq(query, params, xi, t, a, b):
    """Squared spectral amplitude of the requested component at (xi, t).

    The two data channels (the |k|^{-1}-weighted density and the velocity)
    are combined incoherently, modeling the operator-norm character of the
    linear estimates; this removes the plasma-oscillation beating from the
    reported norms without changing the decay exponent.
    """
    rb, hb, nu = params.rho_bar, params.h_prime_bar, params.nu
    # Well-conditioned normalized block for w = rho_hat / xi:
    #   w' = -rho_bar d,   d' = (1 + hb xi^2) w - nu xi^2 d.
    B = np.array([[0.0, -rb], [1.0 + hb * xi * xi, -nu * xi * xi]])
    E = expm2(B, t)
    heat = np.exp(-params.mu / rb * xi * xi * t)
    if query.component == "density":
        return xi * xi * ((E[0, 0] * a) ** 2 + (E[0, 1] * b) ** 2)
    amp = 0.0
    if query.parts in ("both", "compressible"):
        amp += (E[1, 0] * a) ** 2 + (E[1, 1] * b) ** 2
    if query.parts in ("both", "incompressible"):
        amp += (heat * b) ** 2
    return amp


def _l2_norm_at_time(query, params, t, profile, nodes_per_panel):
    gl_x, gl_w = leggauss(nodes_per_panel)
    total = 0.0
    for lo, hi in zip(_radial_panels()[:-1], _radial_panels()[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        for x, w in zip(gl_x, gl_w):
            xi = mid + half * x
            a = float(profile(xi))
            b = a
            amp2 = _mode_amplitude_sq(query, params, xi, t, a, b)
            total += w * half * xi ** (2.0 * query.ell) * amp2 * 4.0 * np.pi * xi * xi
    return np.sqrt(total)


def decay_curve(query: LinearDecayQuery, times, params: FluidParams | None = None,
                nodes_per_panel: int = 10, check_refinement: bool = True):
    """||nabla^ell component(t)||_{L^2(R^3)} at the given times, by composite
    Gauss-Legendre radial quadrature (log-spaced panels below xi = 1)."""
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and increasing")
    if params is None:
        params = FluidParams()
    if query.q == np.inf:
        return _linf_curve(query, times, params, nodes_per_panel)
    profile = initial_profile(query.p, query.profile_name)
    out = []
    for t in times:
        val = _l2_norm_at_time(query, params, t, profile, nodes_per_panel)
        if check_refinement:
            ref = _l2_norm_at_time(query, params, t, profile, 2 * nodes_per_panel)
            if abs(val - ref) > 1e-6 * max(ref, 1e-300):
                raise QuadratureError(
                    f"quadrature not converged at t={t}: {val!r} vs {ref!r}")
        out.append((float(t), float(val)))
    return out


def _linf_curve(query, times, params, nodes_per_panel):
    """L^inf surrogate via interpolation between first- and second-derivative
    L^2 norms: ||f||_inf <~ ||grad f||^{1/2} ||grad^2 f||^{1/2}."""
    q1 = LinearDecayQuery(ell=1.0, p=query.p, q=2.0, component=query.component,
                          parts=query.parts, profile_name=query.profile_name)
    q2 = LinearDecayQuery(ell=2.0, p=query.p, q=2.0, component=query.component,
                          parts=query.parts, profile_name=query.profile_name)
    c1 = decay_curve(q1, times, params, nodes_per_panel)
    c2 = decay_curve(q2, times, params, nodes_per_panel)
    return [(t, np.sqrt(n1 * n2)) for (t, n1), (_, n2) in zip(c1, c2)]


@dataclass(frozen=True)
class FitResult:
    slope: float
    stderr: float
    residual_rms: float
    n: int

    @property
    def is_power_law(self):
        return self.residual_rms < 0.05


def fit_exponent(curve, window=None) -> FitResult:
    """Least-squares slope of log(norm) against log(t) inside a time window."""
    pts = [(t, v) for t, v in curve
           if window is None or window[0] <= t <= window[1]]
    if len(pts) < 10:
        raise ValueError("need at least 10 samples in the fit window")
    t = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.any(v <= 0):
        raise ValueError("all norms must be positive for a log-log fit")
    x, y = np.log(t), np.log(v)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    fitted = A @ coef
    resid = y - fitted
    rms = float(np.sqrt(np.mean(resid ** 2)))
    denom = float(np.sum((x - x.mean()) ** 2))
    dof = max(len(x) - 2, 1)
    stderr = float(np.sqrt(np.sum(resid ** 2) / dof / denom)) if denom > 0 else np.inf
    return FitResult(slope=slope, stderr=stderr, residual_rms=rms, n=len(x))
