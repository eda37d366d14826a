"""Time integration of the nonlinear perturbation system around a steady
state, with energy functionals and bootstrap quantities as online
diagnostics.

Two algebraically equivalent right-hand sides are provided: the
variable-coefficient form (coefficients frozen at rho_s) and the
constant-coefficient form whose linear part matches the Hodge-split mode
symbols; the latter drives the exponential (Lawson midpoint) integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .spectral import (Field, Grid, dealias, divergence, grad_norm, gradient,
                       inverse_transform, lp_norm, poisson_gradient,
                       sobolev_norm)
from .steady import SteadyState
from .semigroup import expm2
from .thermo import FluidParams, remainder

__all__ = [
    "PerturbationState",
    "EnergyReport",
    "DiagnosticsConfig",
    "EvolutionError",
    "zero_state",
    "single_mode_state",
    "random_smooth_state",
    "rhs_nonlinear",
    "Integrator",
    "step",
    "evolve",
    "default_dt",
]


class EvolutionError(RuntimeError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass
class PerturbationState:
    """Perturbation (density, velocity) at one time instant; the potential
    is always re-derived from the density through the Poisson equation."""

    rho: Field
    u: Field
    t: float = 0.0

    def __post_init__(self):
        if self.rho.is_vector:
            raise ValueError("density perturbation must be scalar")
        if not self.u.is_vector or self.u.ncomp != self.grid.dim:
            raise ValueError("velocity must have dim components")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def potential(self) -> Field:
        """Mean-zero Phi with Lap Phi = rho."""
        from .spectral import inverse_laplacian
        return inverse_laplacian(self.rho)

    def grad_potential(self) -> Field:
        return poisson_gradient(self.rho)

    def check(self, ss: SteadyState):
        if abs(self.rho.mean()) > 1e-12:
            raise EvolutionError(f"density mean {self.rho.mean():.3e} nonzero", self)
        total = self.rho.values + ss.rho_s.values
        if np.any(total <= 0):
            idx = np.unravel_index(int(np.argmin(total)), total.shape)
            raise EvolutionError(f"total density nonpositive at index {idx}", self)


def zero_state(grid: Grid) -> PerturbationState:
    return PerturbationState(
        rho=Field(grid, np.zeros(grid.shape)),
        u=Field(grid, np.zeros((grid.dim,) + grid.shape)))


def single_mode_state(grid: Grid, mode: int = 1, amplitude: float = 1e-3,
                      with_velocity: bool = False) -> PerturbationState:
    """cos mode in the density (mean-zero); optionally a matching velocity."""
    x = grid.coords()[0]
    rho = amplitude * np.cos(2.0 * np.pi * mode * x / grid.length)
    u = np.zeros((grid.dim,) + grid.shape)
    if with_velocity:
        u[0] = amplitude * np.sin(2.0 * np.pi * mode * x / grid.length)
    return PerturbationState(rho=Field(grid, rho), u=Field(grid, u))


def random_smooth_state(grid: Grid, seed: int = 0, amplitude: float = 1e-3,
                        band: int = 3, norm_index: int = 4) -> PerturbationState:
    """Random band-limited state scaled so ||(rho, u)||_{H^k} = amplitude."""
    rng = np.random.default_rng(seed)
    m = grid.mode_numbers()
    inband = np.all(np.abs(m) <= band, axis=0)
    inband[(0,) * grid.dim] = False

    def one_scalar():
        spec = np.zeros(grid.shape, dtype=complex)
        phase = rng.uniform(0, 2 * np.pi, size=grid.shape)
        mag = rng.uniform(0.5, 1.0, size=grid.shape)
        spec[inband] = (mag * np.exp(1j * phase))[inband]
        f = inverse_transform(grid, spec)        # real part enforces symmetry
        return f.values - f.values.mean()

    rho = Field(grid, one_scalar())
    u = Field(grid, np.stack([one_scalar() for _ in range(grid.dim)]))
    size = np.hypot(sobolev_norm(rho, norm_index), sobolev_norm(u, norm_index))
    scale = amplitude / size if size > 0 else 0.0
    return PerturbationState(rho=scale * rho, u=scale * u)


def _viscous(params, u: Field) -> Field:
    """mu Lap u + (mu + mu') grad div u (vector output)."""
    grid = u.grid
    k = grid.wavevectors()
    k2 = grid.wavenumber_magnitude() ** 2
    spec = u.spectrum()
    div_spec = sum(spec[a] * (1j * k[a]) for a in range(grid.dim))
    out = np.empty_like(spec)
    for a in range(grid.dim):
        out[a] = -params.mu * k2 * spec[a] \
            + (params.mu + params.mu_prime) * (1j * k[a]) * div_spec
    return inverse_transform(grid, out)


def _advection(u: Field) -> Field:
    """Dealiased u . grad u."""
    grid = u.grid
    comps = []
    for a in range(grid.dim):
        g = gradient(u.component(a))
        comps.append(np.sum(u.values * g.values, axis=0))
    return dealias(Field(grid, np.stack(comps)))


def _scalar_times_vector(s: np.ndarray, v: Field) -> Field:
    return dealias(Field(v.grid, s[None, :] * v.values))


def rhs_nonlinear(state: PerturbationState, ss: SteadyState,
                  params: FluidParams, form: str = "constant"):
    """Time derivative (d rho / dt, d u / dt) of the perturbation system.

    form="variable" keeps the coefficients at rho_s; form="constant"
    freezes them at rho_bar and carries the difference in the nonlinear
    terms.  Both are assembled pseudo-spectrally with dealiased products
    and agree up to roundoff.
    """
    state.check(ss)
    grid = state.grid
    law = params.law
    rho_s, rho_bar = ss.rho_s, params.rho_bar
    total = state.rho.values + rho_s.values

    visc = _viscous(params, state.u)
    grad_phi = state.grad_potential()
    adv = _advection(state.u)
    grad_R = gradient(dealias(remainder(law, state.rho, rho_s)))

    if form == "variable":
        # d rho/dt = -div(rho_s u) - div(rho u)
        drho = -(divergence(_scalar_times_vector(rho_s.values, state.u)).values
                 + divergence(_scalar_times_vector(state.rho.values, state.u)).values)
        hp_s = np.asarray(law.h_prime(rho_s.values))
        press = gradient(dealias(Field(grid, hp_s * state.rho.values)))
        inv_coeff = dealias(Field(grid, 1.0 / rho_s.values))
        visc_term = _scalar_times_vector(inv_coeff.values, visc)
        inv_jump = dealias(Field(grid, 1.0 / total - 1.0 / rho_s.values))
        du = (-press.values + visc_term.values + grad_phi.values
              - adv.values - grad_R.values
              + _scalar_times_vector(inv_jump.values, visc).values)
    elif form == "constant":
        hp_bar = params.h_prime_bar
        carried = Field(grid, state.rho.values + (rho_s.values - rho_bar))
        drho = -(rho_bar * divergence(state.u).values
                 + divergence(_scalar_times_vector(carried.values, state.u)).values)
        hp_s = np.asarray(law.h_prime(rho_s.values))
        press_lin = gradient(state.rho)
        press_jump = gradient(dealias(
            Field(grid, (hp_s - hp_bar) * state.rho.values)))
        inv_jump = dealias(Field(grid, 1.0 / total - 1.0 / rho_bar))
        du = (-hp_bar * press_lin.values + visc.values / rho_bar
              + grad_phi.values
              - adv.values - grad_R.values - press_jump.values
              + _scalar_times_vector(inv_jump.values, visc).values)
    else:
        raise ValueError("form must be 'variable' or 'constant'")
    return Field(grid, drho), Field(grid, du)


def nonlinear_terms(state: PerturbationState, ss: SteadyState,
                    params: FluidParams):
    """(N1, N2) of the constant-coefficient form: the full right-hand side
    minus the linear part matching the mode symbols."""
    grid = state.grid
    law = params.law
    rho_s, rho_bar = ss.rho_s, params.rho_bar
    total = state.rho.values + rho_s.values
    hp_bar = params.h_prime_bar
    hp_s = np.asarray(law.h_prime(rho_s.values))

    carried = Field(grid, state.rho.values + (rho_s.values - rho_bar))
    n1 = -divergence(_scalar_times_vector(carried.values, state.u)).values

    visc = _viscous(params, state.u)
    adv = _advection(state.u)
    grad_R = gradient(dealias(remainder(law, state.rho, rho_s)))
    press_jump = gradient(dealias(
        Field(grid, (hp_s - hp_bar) * state.rho.values)))
    inv_jump = dealias(Field(grid, 1.0 / total - 1.0 / rho_bar))
    n2 = (-adv.values - grad_R.values - press_jump.values
          + _scalar_times_vector(inv_jump.values, visc).values)
    return Field(grid, n1), Field(grid, n2)


def default_dt(params: FluidParams, grid: Grid, cfl: float = 0.4) -> float:
    """CFL-style step: min of acoustic and diffusive limits."""
    wave_speed = np.sqrt(params.h_prime_bar * params.rho_bar + 1.0)
    dx = grid.dx
    acoustic = dx / wave_speed
    diffusive = dx * dx * params.rho_bar / (2.0 * params.mu + params.mu_prime)
    return cfl * min(acoustic, diffusive)


class Integrator:
    """Lawson (exponential) midpoint stepper.

    The constant-coefficient linear part is applied exactly per mode using
    the Hodge-split 2x2 semigroup; the nonlinear terms are advanced by an
    explicit two-stage midpoint update.  The density zero mode is pinned to
    zero, conserving mass exactly.
    """

    def __init__(self, ss: SteadyState, params: FluidParams, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.ss = ss
        self.params = params
        self.dt = dt
        self.grid = ss.rho_s.grid
        self._prop_full = self._build_propagator(dt)
        self._prop_half = self._build_propagator(0.5 * dt)

    def _build_propagator(self, t):
        grid, params = self.grid, self.params
        kmag = grid.wavenumber_magnitude()
        rb, hb, nu = params.rho_bar, params.h_prime_bar, params.nu
        shape = grid.shape
        E = np.empty(shape + (2, 2))
        flat_k = kmag.ravel()
        E_flat = E.reshape(-1, 2, 2)
        for i, xi in enumerate(flat_k):
            if xi == 0.0:
                E_flat[i] = np.eye(2)
            else:
                B = np.array([[0.0, -rb * xi],
                              [hb * xi + 1.0 / xi, -nu * xi * xi]])
                E_flat[i] = expm2(B, t)
        heat = np.exp(-params.mu / rb * kmag ** 2 * t)
        return E, heat

    def _apply_linear(self, rho_spec, u_spec, prop):
        E, heat = prop
        grid = self.grid
        k = grid.wavevectors()
        kmag = grid.wavenumber_magnitude()
        safe = np.where(kmag > 0, kmag, 1.0)
        khat = k / safe
        du = sum(khat[a] * u_spec[a] for a in range(grid.dim)) * 1j
        rho_new = E[..., 0, 0] * rho_spec + E[..., 0, 1] * du
        d_new = E[..., 1, 0] * rho_spec + E[..., 1, 1] * du
        u_new = np.empty_like(u_spec)
        proj = sum(khat[a] * u_spec[a] for a in range(grid.dim))
        for a in range(grid.dim):
            uperp = u_spec[a] - proj * khat[a]
            u_new[a] = -1j * d_new * khat[a] + heat * uperp
        # zero mode: identity on velocity, density pinned to zero
        zidx = (0,) * grid.dim
        rho_new[zidx] = 0.0
        for a in range(grid.dim):
            u_new[(a,) + zidx] = u_spec[(a,) + zidx]
        return rho_new, u_new

    def _specs(self, state):
        return state.rho.spectrum().copy(), state.u.spectrum().copy()

    def step(self, state: PerturbationState) -> PerturbationState:
        grid = self.grid
        dt = self.dt
        rho0, u0 = self._specs(state)

        n1, n2 = nonlinear_terms(state, self.ss, self.params)
        n1s, n2s = n1.spectrum(), n2.spectrum()

        # half step: U* = E(dt/2) (U + dt/2 N(U))
        rho_h, u_h = self._apply_linear(rho0 + 0.5 * dt * n1s,
                                        u0 + 0.5 * dt * n2s, self._prop_half)
        rho_h[(0,) * grid.dim] = 0.0
        mid = PerturbationState(rho=inverse_transform(grid, rho_h),
                                u=inverse_transform(grid, u_h),
                                t=state.t + 0.5 * dt)
        m1, m2 = nonlinear_terms(mid, self.ss, self.params)
        m1h, m2h = self._apply_linear(m1.spectrum(), m2.spectrum(),
                                      self._prop_half)

        rho_f, u_f = self._apply_linear(rho0, u0, self._prop_full)
        rho_f = rho_f + dt * m1h
        u_f = u_f + dt * m2h
        rho_f[(0,) * grid.dim] = 0.0

        new = PerturbationState(rho=inverse_transform(grid, rho_f),
                                u=inverse_transform(grid, u_f),
                                t=state.t + dt)
        if not (np.all(np.isfinite(new.rho.values))
                and np.all(np.isfinite(new.u.values))):
            raise EvolutionError(f"non-finite field at t={new.t:.6g}", new)
        new.check(self.ss)
        return new


def step(state: PerturbationState, ss: SteadyState, params: FluidParams,
         dt: float) -> PerturbationState:
    """One-off single step (builds a throwaway integrator)."""
    return Integrator(ss, params, dt).step(state)


@dataclass(frozen=True)
class DiagnosticsConfig:
    k: int = 4
    p: float = 1.0
    r: float = 1.2
    ells: tuple = (0.5, 1.5)

    @property
    def zeta(self):
        return 1.5 * (1.0 / max(self.p, self.r) - 0.5)


@dataclass
class EnergyReport:
    t: float
    hk_rho: float
    hk_u: float
    grad_phi_l2: float
    dissipation: float              # int_0^t (||rho||_Hk^2 + ||grad u||_Hk^2)
    energy_lhs: float               # ||(rho,u)||_Hk^2 + ||grad Phi||_L2^2 + dissipation
    e_surrogate: dict               # ell -> ||nabla^ell (rho, u, grad Phi)||_{H^{k-ell}}^2
    script_l: float
    script_m: float
    script_h: float
    script_j: float
    script_n: float                 # running sup (case 6/5 <= r < 3/2)
    script_k: float                 # running sup (case 1 < r < 6/5)


def _frac_hk_sq(f: Field, ell: float, k: int) -> float:
    """||nabla^ell f||_{H^{k-ell}}^2 via multiplier norms at integer offsets."""
    top = int(np.floor(k - ell))
    return sum(grad_norm(f, ell + j) ** 2 for j in range(top + 1))


def _instant_diagnostics(state: PerturbationState, cfg: DiagnosticsConfig):
    rho, u = state.rho, state.u
    grad_phi = state.grad_potential()
    k = cfg.k
    d = {
        "hk_rho": sobolev_norm(rho, k),
        "hk_u": sobolev_norm(u, k),
        "grad_phi_l2": grad_norm(grad_phi, 0.0),
        "rho_l2": grad_norm(rho, 0.0),
        "u_l2": grad_norm(u, 0.0),
        "rho_linf": lp_norm(rho, np.inf),
        "u_linf": lp_norm(u, np.inf),
    }
    d["script_l"] = (grad_norm(rho, 0.5) + grad_norm(u, 1.5)
                     + d["rho_linf"] + d["u_linf"])
    d["script_m"] = np.sqrt(_frac_hk_sq(rho, 0.5, k)) \
        + np.sqrt(_frac_hk_sq(u, 1.5, k))
    d["script_h"] = d["rho_l2"] + grad_norm(u, 1.0) + d["rho_linf"] + d["u_linf"]
    d["script_j"] = sobolev_norm(rho, k) + np.sqrt(_frac_hk_sq(u, 1.0, k))
    d["e_surrogate"] = {
        ell: (_frac_hk_sq(rho, ell, k) + _frac_hk_sq(u, ell, k)
              + _frac_hk_sq(grad_phi, ell, k))
        for ell in cfg.ells
    }
    return d


def initial_data_size(state: PerturbationState, cfg: DiagnosticsConfig) -> float:
    """K0 = ||(grad^{-1} rho_0, u_0)||_{L^p} + ||(rho_0, u_0)||_{H^k}
    + ||grad Phi_0||_{L^2}."""
    from .spectral import frac_derivative
    ginv = frac_derivative(state.rho, -1.0)
    lp = lp_norm(ginv, cfg.p) + lp_norm(state.u, cfg.p)
    hk = sobolev_norm(state.rho, cfg.k) + sobolev_norm(state.u, cfg.k)
    return lp + hk + grad_norm(state.grad_potential(), 0.0)


def evolve(initial: PerturbationState, ss: SteadyState, params: FluidParams,
           t_end: float, dt: float | None = None, report_every: int = 10,
           diagnostics: DiagnosticsConfig | None = None,
           keep_trajectory: bool = False, snapshot_cb=None):
    """Advance the perturbation to t_end, emitting EnergyReports.

    On blow-up or positivity loss the trajectory is truncated and the
    partial reports are returned inside the raised EvolutionError (attribute
    ``reports``)."""
    cfg = diagnostics or DiagnosticsConfig()
    if dt is None:
        dt = default_dt(params, initial.grid)
    stepper = Integrator(ss, params, dt)
    zeta = cfg.zeta

    reports = []
    trajectory = [initial] if keep_trajectory else []
    diss = 0.0
    sup_n = 0.0
    sup_k = 0.0
    prev_diss_integrand = None

    def push_report(state):
        nonlocal sup_n, sup_k
        d = _instant_diagnostics(state, cfg)
        w = 1.0 + state.t
        sup_n = max(sup_n,
                    w ** (zeta + 0.75) * (d["script_l"] + d["script_m"])
                    + w ** (zeta + 0.5) * d["rho_l2"] + w ** zeta * d["u_l2"])
        sup_k = max(sup_k,
                    w ** (zeta + 0.5) * (d["script_h"] + d["script_j"]))
        lhs = d["hk_rho"] ** 2 + d["hk_u"] ** 2 + d["grad_phi_l2"] ** 2 + diss
        reports.append(EnergyReport(
            t=state.t, hk_rho=d["hk_rho"], hk_u=d["hk_u"],
            grad_phi_l2=d["grad_phi_l2"], dissipation=diss, energy_lhs=lhs,
            e_surrogate=d["e_surrogate"],
            script_l=d["script_l"], script_m=d["script_m"],
            script_h=d["script_h"], script_j=d["script_j"],
            script_n=sup_n, script_k=sup_k))
        if snapshot_cb is not None:
            snapshot_cb(state, reports[-1])

    def diss_integrand(state):
        return (sobolev_norm(state.rho, cfg.k) ** 2
                + _frac_hk_sq(state.u, 1.0, cfg.k + 1))

    state = initial
    prev_diss_integrand = diss_integrand(state)
    push_report(state)
    nsteps = int(round(t_end / dt))
    for istep in range(1, nsteps + 1):
        try:
            state = stepper.step(state)
        except EvolutionError as err:
            err.reports = reports
            raise
        cur = diss_integrand(state)
        diss += 0.5 * dt * (prev_diss_integrand + cur)   # trapezoidal
        prev_diss_integrand = cur
        if keep_trajectory:
            trajectory.append(state)
        if istep % report_every == 0 or istep == nsteps:
            push_report(state)
    return trajectory, reports
