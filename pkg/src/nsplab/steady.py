"""Stationary states for a prescribed doping profile.

The zero-velocity balance grad p(rho_s) = rho_s grad phi_s together with the
Poisson equation reduces to the semilinear elliptic problem

    div(h'(rho_s) grad rho_s) = rho_s - b,

solved here by a damped Picard sweep on f = rho_s - rho_bar:

    (-h'(rho_bar) Lap + 1) f_new = div((h'(rho_s) - h'(rho_bar)) grad f) + (b - b_bar),

each sweep being one Fourier-multiplier inversion.  The potential is
recovered as phi_s = h(rho_s) - mean(h(rho_s)) (mean-zero gauge).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .spectral import (Field, Grid, dealias, divergence, gradient,
                       inverse_transform, lp_norm, sobolev_norm)
from .thermo import FluidParams

__all__ = [
    "DopingProfile",
    "SteadyState",
    "SteadyReport",
    "SteadySolveError",
    "flat_doping",
    "gaussian_bump_doping",
    "cosine_doping",
    "doping_from_name",
    "solve_steady",
    "verify_steady",
]


class SteadySolveError(RuntimeError):
    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


@dataclass(frozen=True)
class DopingProfile:
    """Positive background ion density b(x); b_bar is its spatial mean."""

    b: Field
    descriptor: str = "gridded"

    def __post_init__(self):
        if np.any(self.b.values <= 0):
            raise ValueError("doping profile must be positive everywhere")

    @property
    def b_bar(self):
        return float(self.b.values.mean())

    @property
    def grid(self):
        return self.b.grid


def flat_doping(grid: Grid, value: float = 1.0) -> DopingProfile:
    return DopingProfile(Field(grid, np.full(grid.shape, value)),
                         descriptor=f"flat({value})")


def gaussian_bump_doping(grid: Grid, amplitude: float = 0.1,
                         center: float | None = None,
                         sigma: float | None = None,
                         base: float = 1.0) -> DopingProfile:
    """b = base + amplitude * sum of periodic images of exp(-|x - c|^2 / sigma^2).

    Summing the nearest neighbor images keeps the profile smooth across the
    periodic seam (a plain min-image wrap would leave derivative kinks)."""
    L = grid.length
    c = 0.5 * L if center is None else center
    s = L / 8.0 if sigma is None else sigma
    x = grid.coords()
    d = np.mod(x - c + 0.5 * L, L) - 0.5 * L
    bump = np.zeros(grid.shape)
    offsets = np.array([-L, 0.0, L])
    grids = np.meshgrid(*([offsets] * grid.dim), indexing="ij")
    for shift in zip(*(g.ravel() for g in grids)):
        r2 = sum((d[a] + shift[a]) ** 2 for a in range(grid.dim))
        bump += np.exp(-r2 / s ** 2)
    vals = base + amplitude * bump
    return DopingProfile(Field(grid, vals),
                         descriptor=f"gaussian-bump({amplitude},{c},{s})")


def cosine_doping(grid: Grid, amplitude: float = 0.1, mode: int = 1,
                  base: float = 1.0) -> DopingProfile:
    x = grid.coords()[0]
    vals = base + amplitude * np.cos(2.0 * np.pi * mode * x / grid.length)
    return DopingProfile(Field(grid, np.broadcast_to(vals, grid.shape).copy()),
                         descriptor=f"cosine({amplitude},{mode})")


def doping_from_name(grid: Grid, name: str, **params) -> DopingProfile:
    presets = {
        "flat": flat_doping,
        "gaussian-bump": gaussian_bump_doping,
        "cosine": cosine_doping,
    }
    if name not in presets:
        raise ValueError(f"unknown doping preset {name!r}; "
                         f"choose from {sorted(presets)}")
    return presets[name](grid, **params)


@dataclass
class SteadyState:
    rho_s: Field
    phi_s: Field
    f: Field                      # rho_s - rho_bar
    rho_bar: float
    residual_l2: float
    iterations: int
    residual_history: list = dc_field(default_factory=list)


def _elliptic_residual(params, rho_s, doping):
    """L2 norm of div(h'(rho_s) grad rho_s) - (rho_s - b)."""
    hp = Field(rho_s.grid, np.asarray(params.law.h_prime(rho_s.values)))
    g = gradient(rho_s)
    flux = Field(rho_s.grid, hp.values[None, :] * g.values)
    lhs = divergence(dealias(flux))
    res = lhs.values - (rho_s.values - doping.b.values)
    return float(np.sqrt(np.sum(res ** 2) * rho_s.grid.cell_volume))


def _picard_sweep(params, doping, f, hp_bar):
    """One multiplier inversion of the constant-coefficient reformulation."""
    grid = doping.grid
    rho_s = Field(grid, params.rho_bar + f.values)
    hp = np.asarray(params.law.h_prime(rho_s.values))
    coeff = Field(grid, hp - hp_bar)
    grad_f = gradient(f)
    flux = dealias(Field(grid, coeff.values[None, :] * grad_f.values))
    rhs = divergence(flux).values + (doping.b.values - doping.b_bar)
    rhs_f = Field(grid, rhs)
    k2 = grid.wavenumber_magnitude() ** 2
    sym = 1.0 / (hp_bar * k2 + 1.0)
    return inverse_transform(grid, rhs_f.spectrum() * sym)


def solve_steady(params: FluidParams, doping: DopingProfile,
                 tol: float = 1e-10, max_iter: int = 200,
                 relaxation: float = 1.0, newton: bool = False,
                 initial_f: Field | None = None) -> SteadyState:
    """Damped Picard (optionally Newton-accelerated) solve of the steady
    elliptic equation.  Convergence is measured by the H^2 norm of the
    update; the returned residual is the L2 defect of the full equation."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = doping.grid
    rho_bar = params.rho_bar
    if not np.isclose(rho_bar, doping.b_bar, rtol=1e-12, atol=1e-12):
        raise ValueError(
            f"reference density {rho_bar} must equal mean doping {doping.b_bar}")
    hp_bar = float(params.law.h_prime(rho_bar))

    b_lo, b_hi = float(doping.b.values.min()), float(doping.b.values.max())
    margin = 0.1 * (b_hi - b_lo)

    f = Field(grid, np.zeros(grid.shape)) if initial_f is None else initial_f
    omega = relaxation
    history = []
    prev_res = np.inf
    for it in range(1, max_iter + 1):
        target = _picard_sweep(params, doping, f, hp_bar)
        if newton:
            target = _newton_correct(params, doping, f, target, hp_bar)
        f_new = Field(grid, (1.0 - omega) * f.values + omega * target.values)
        rho_new = Field(grid, rho_bar + f_new.values)
        if np.any(rho_new.values <= 0):
            raise SteadySolveError("total density left (0, inf) during iteration",
                                   history)
        if (rho_new.values.min() < b_lo - margin - 1e-14
                or rho_new.values.max() > b_hi + margin + 1e-14):
            raise SteadySolveError(
                "iterate left the admissible doping range "
                f"[{b_lo - margin:.6g}, {b_hi + margin:.6g}]", history)
        res = _elliptic_residual(params, rho_new, doping)
        history.append(res)
        if res > prev_res and omega > 0.0625:
            omega *= 0.5           # automatic damping on residual increase
        update = sobolev_norm(Field(grid, f_new.values - f.values), 2)
        f = f_new
        prev_res = res
        if update < tol or res < tol:
            break
    else:
        raise SteadySolveError(
            f"no convergence within {max_iter} iterations "
            f"(last residual {history[-1]:.3e})", history)

    rho_s = Field(grid, rho_bar + f.values)
    h_vals = np.asarray(params.law.h(rho_s.values))
    phi_s = Field(grid, h_vals - h_vals.mean())
    return SteadyState(rho_s=rho_s, phi_s=phi_s, f=f, rho_bar=rho_bar,
                       residual_l2=history[-1] if history else 0.0,
                       iterations=len(history), residual_history=history)


def _newton_correct(params, doping, f, picard_target, hp_bar, inner=4):
    """Refine the Picard target by a few preconditioned corrections of the
    full linearized residual (inexact Newton with the constant-coefficient
    operator as preconditioner)."""
    grid = doping.grid
    law = params.law
    k2 = grid.wavenumber_magnitude() ** 2
    sym = 1.0 / (hp_bar * k2 + 1.0)
    g = picard_target
    for _ in range(inner):
        rho = Field(grid, params.rho_bar + g.values)
        if np.any(rho.values <= 0):
            return picard_target
        hp = np.asarray(law.h_prime(rho.values))
        grad_g = gradient(g)
        flux = dealias(Field(grid, hp[None, :] * grad_g.values))
        defect = divergence(flux).values - (rho.values - doping.b.values)
        corr = inverse_transform(grid, Field(grid, defect).spectrum() * sym)
        g = Field(grid, g.values + corr.values)
    return g


@dataclass
class SteadyReport:
    bounds_ok: bool
    rho_min: float
    rho_max: float
    b_min: float
    b_max: float
    mean_mismatch: float
    residual_l2: float
    gradient_balance_l2: float      # || grad h(rho_s) - grad phi_s ||_L2
    grad_rho_hk: float              # || grad rho_s ||_{H^k}
    w2r_deviation: float            # || rho_s - rho_bar ||_{W^{2,r}} (discrete)
    lr_doping_deviation: float      # || b - b_bar ||_{L^r}
    ratio_w2r_lr: float


def w2r_norm(f: Field, r: float) -> float:
    """Discrete W^{2,r}: grid L^r quadrature of the function, its multiplier
    gradient, and its multiplier Hessian (Frobenius magnitude)."""
    g = gradient(f)
    grid = f.grid
    hess_rows = [gradient(g.component(a)) for a in range(grid.dim)]
    hess_sq = sum(np.sum(h.values ** 2, axis=0) for h in hess_rows)
    hess = Field(grid, np.sqrt(hess_sq))
    return (lp_norm(f, r) ** r + lp_norm(g, r) ** r
            + lp_norm(hess, r) ** r) ** (1.0 / r)


def verify_steady(params: FluidParams, ss: SteadyState, doping: DopingProfile,
                  r: float = 1.2, hk: int = 2, slack: float = 1e-8) -> SteadyReport:
    """Diagnostic report on a computed steady state (pure checks, no raise)."""
    grid = ss.rho_s.grid
    b_min, b_max = float(doping.b.values.min()), float(doping.b.values.max())
    rho_min = float(ss.rho_s.values.min())
    rho_max = float(ss.rho_s.values.max())
    bounds_ok = rho_min >= b_min - slack and rho_max <= b_max + slack

    h_vals = np.asarray(params.law.h(ss.rho_s.values))
    bal = gradient(Field(grid, h_vals)) - gradient(ss.phi_s)
    bal_l2 = float(np.sqrt(np.sum(bal.values ** 2) * grid.cell_volume))

    dev = Field(grid, doping.b.values - doping.b_bar)
    w2r = w2r_norm(ss.f, r)
    lr = lp_norm(dev, r)
    return SteadyReport(
        bounds_ok=bounds_ok,
        rho_min=rho_min, rho_max=rho_max, b_min=b_min, b_max=b_max,
        mean_mismatch=abs(float(ss.rho_s.values.mean()) - doping.b_bar),
        residual_l2=_elliptic_residual(params, ss.rho_s, doping),
        gradient_balance_l2=bal_l2,
        grad_rho_hk=sobolev_norm(gradient(ss.rho_s), hk),
        w2r_deviation=w2r,
        lr_doping_deviation=lr,
        ratio_w2r_lr=w2r / lr if lr > 0 else 0.0,
    )
