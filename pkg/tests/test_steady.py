import numpy as np
import pytest

from nsplab.spectral import Field, Grid, gradient, lp_norm
from nsplab.steady import (SteadySolveError, cosine_doping, doping_from_name,
                           flat_doping, gaussian_bump_doping, solve_steady,
                           verify_steady, w2r_norm)
from nsplab.thermo import FluidParams, GammaLaw

GRID = Grid(dim=2, n=32)


def params_for(doping, gamma=2.0):
    return FluidParams(law=GammaLaw(gamma), rho_bar=doping.b_bar)


class TestDopingPresets:
    def test_flat(self):
        d = flat_doping(GRID, 1.5)
        assert d.b_bar == pytest.approx(1.5)
        assert np.all(d.b.values == 1.5)

    def test_gaussian_bump_positive_and_smooth(self):
        d = gaussian_bump_doping(GRID, amplitude=0.2)
        assert np.all(d.b.values > 0)
        # smooth periodization: spectral tail must decay below roundoff
        spec = np.abs(d.b.spectrum())
        m = np.max(np.abs(GRID.mode_numbers()), axis=0)
        assert spec[m > 12].max() < 1e-13

    def test_cosine_mean(self):
        d = cosine_doping(GRID, amplitude=0.3, mode=2)
        assert d.b_bar == pytest.approx(1.0, abs=1e-14)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="positive"):
            cosine_doping(GRID, amplitude=1.5)

    def test_from_name(self):
        d = doping_from_name(GRID, "gaussian-bump", amplitude=0.05)
        assert "gaussian-bump" in d.descriptor
        with pytest.raises(ValueError, match="unknown doping preset"):
            doping_from_name(GRID, "triangle")


class TestSolveSteady:
    def test_flat_doping_gives_constant_state(self):
        d = flat_doping(GRID, 1.0)
        ss = solve_steady(params_for(d), d)
        np.testing.assert_allclose(ss.rho_s.values, 1.0, atol=1e-13)
        np.testing.assert_allclose(ss.phi_s.values, 0.0, atol=1e-13)

    def test_quadratic_pressure_solves_in_few_sweeps(self):
        # the bump must be well resolved for the residual to reach the
        # solver tolerance rather than the truncation floor
        grid = Grid(dim=2, n=64)
        d = gaussian_bump_doping(grid, amplitude=0.1)
        ss = solve_steady(params_for(d), d)
        assert ss.iterations <= 3
        assert ss.residual_l2 < 1e-10

    def test_general_pressure_converges(self):
        d = cosine_doping(GRID, amplitude=0.1)
        ss = solve_steady(params_for(d, gamma=1.4), d)
        assert ss.residual_l2 < 1e-9

    def test_newton_acceleration(self):
        d = cosine_doping(GRID, amplitude=0.1)
        plain = solve_steady(params_for(d, gamma=1.4), d)
        newton = solve_steady(params_for(d, gamma=1.4), d, newton=True)
        assert newton.iterations <= plain.iterations
        assert newton.residual_l2 < 1e-9

    def test_mean_mismatch_rejected(self):
        d = gaussian_bump_doping(GRID, amplitude=0.1)
        with pytest.raises(ValueError, match="mean doping"):
            solve_steady(FluidParams(law=GammaLaw(2.0), rho_bar=1.0), d)

    def test_density_stays_inside_doping_range(self):
        d = gaussian_bump_doping(GRID, amplitude=0.2)
        ss = solve_steady(params_for(d), d)
        rep = verify_steady(params_for(d), ss, d)
        assert rep.bounds_ok

    def test_failure_carries_history(self):
        d = cosine_doping(GRID, amplitude=0.1)
        with pytest.raises(SteadySolveError) as exc:
            solve_steady(params_for(d, gamma=1.4), d, tol=1e-30, max_iter=3)
        assert len(exc.value.residual_history) == 3

    def test_linear_response_scaling(self):
        # halving the doping amplitude halves the density deviation
        norms = {}
        for amp in (0.05, 0.025):
            d = gaussian_bump_doping(GRID, amplitude=amp)
            ss = solve_steady(params_for(d), d)
            norms[amp] = lp_norm(ss.f, 2.0)
        assert norms[0.025] / norms[0.05] == pytest.approx(0.5, abs=0.02)


class TestVerifySteady:
    def test_potential_balances_enthalpy_gradient(self):
        d = gaussian_bump_doping(GRID, amplitude=0.1)
        p = params_for(d)
        ss = solve_steady(p, d)
        rep = verify_steady(p, ss, d)
        assert rep.gradient_balance_l2 < 1e-12
        assert rep.mean_mismatch < 1e-13

    def test_w2r_norm_bounds_lr(self):
        rng = np.random.default_rng(0)
        f = Field(GRID, rng.normal(size=GRID.shape))
        f = Field(GRID, f.values - f.values.mean())
        assert w2r_norm(f, 1.2) >= lp_norm(f, 1.2)
