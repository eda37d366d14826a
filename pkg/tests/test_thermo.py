import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplab.spectral import Field, Grid
from nsplab.thermo import (FluidParams, GammaLaw, TabulatedLaw, enthalpy,
                           enthalpy_prime, remainder)

GRID = Grid(dim=2, n=8)


def const_field(value):
    return Field(GRID, np.full(GRID.shape, value))


class TestGammaLaw:
    def test_rejects_gamma_below_one(self):
        with pytest.raises(ValueError):
            GammaLaw(0.9)

    def test_isothermal_enthalpy_is_log(self):
        law = GammaLaw(1.0)
        z = np.array([0.5, 1.0, 2.0])
        np.testing.assert_allclose(law.h(z), np.log(z), atol=1e-14)

    def test_closed_form_matches_quadrature(self):
        # closed-form enthalpy against the base-class adaptive integral
        for g in (1.3, 2.0, 2.7):
            law = GammaLaw(g)
            ref = TabulatedLaw(p_fn=law.p, dp_fn=law.dp)
            z = np.linspace(0.4, 2.5, 7)
            np.testing.assert_allclose(law.h(z), ref.h(z), atol=1e-10)

    def test_derivative_consistency(self):
        law = GammaLaw(1.7)
        z = np.linspace(0.5, 2.0, 9)
        eps = 1e-6
        num = (law.h(z + eps) - law.h(z - eps)) / (2 * eps)
        np.testing.assert_allclose(law.h_prime(z), num, rtol=1e-8)
        num2 = (law.h_prime(z + eps) - law.h_prime(z - eps)) / (2 * eps)
        np.testing.assert_allclose(law.h_second(z), num2, rtol=1e-7)

    def test_quadratic_law_has_constant_slope(self):
        law = GammaLaw(2.0)
        z = np.linspace(0.2, 3.0, 11)
        np.testing.assert_allclose(law.h_prime(z), 2.0, atol=1e-14)
        np.testing.assert_allclose(law.h_second(z), 0.0, atol=1e-14)


class TestFluidParams:
    def test_viscosity_conditions(self):
        with pytest.raises(ValueError):
            FluidParams(mu=0.0)
        with pytest.raises(ValueError):
            FluidParams(mu=1.0, mu_prime=-0.7)
        FluidParams(mu=1.0, mu_prime=-2.0 / 3.0)  # boundary case allowed

    def test_nu(self):
        p = FluidParams(mu=1.5, mu_prime=0.5, rho_bar=2.0)
        assert p.nu == pytest.approx(1.75)

    def test_positivity_guard(self):
        with pytest.raises(ValueError, match="nonpositive"):
            enthalpy(GammaLaw(2.0), np.array([1.0, -0.5]))
        with pytest.raises(ValueError, match="nonpositive"):
            enthalpy_prime(GammaLaw(2.0), 0.0)


class TestRemainder:
    @settings(max_examples=30, deadline=None)
    @given(gamma=st.sampled_from([1.0, 1.4, 2.0, 2.5, 3.0]),
           seed=st.integers(0, 10 ** 6))
    def test_taylor_identity(self, gamma, seed):
        # h(a + x) = h(a) + h'(a) x + R(x, a) must hold pointwise
        law = GammaLaw(gamma)
        rng = np.random.default_rng(seed)
        rho_s = Field(GRID, 1.0 + 0.3 * rng.uniform(-1, 1, GRID.shape))
        pert = Field(GRID, 0.2 * rng.uniform(-1, 1, GRID.shape))
        R = remainder(law, pert, rho_s)
        lhs = law.h(pert.values + rho_s.values)
        rhs = (law.h(rho_s.values)
               + law.h_prime(rho_s.values) * pert.values + R.values)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_quadratic_law_remainder_zero(self):
        R = remainder(GammaLaw(2.0), const_field(0.3), const_field(1.2))
        assert np.all(R.values == 0.0)

    def test_quadrature_path_matches_closed_form(self):
        g = 1.6
        law = GammaLaw(g)
        shadow = TabulatedLaw(
            p_fn=law.p, dp_fn=law.dp,
            d2p_fn=lambda z: g * (g - 1.0) * z ** (g - 2.0))
        rng = np.random.default_rng(4)
        rho_s = Field(GRID, 1.0 + 0.2 * rng.uniform(-1, 1, GRID.shape))
        pert = Field(GRID, 0.15 * rng.uniform(-1, 1, GRID.shape))
        a = remainder(law, pert, rho_s)
        b = remainder(shadow, pert, rho_s)
        np.testing.assert_allclose(a.values, b.values, atol=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(scale=st.floats(0.1, 1.0), gamma=st.sampled_from([1.4, 3.0]))
    def test_quadratic_scaling(self, scale, gamma):
        # R is quadratic at leading order: R(s x) ~ s^2 R(x) for small x
        law = GammaLaw(gamma)
        base = const_field(1.0)
        x = 1e-4
        r1 = remainder(law, const_field(x * scale), base).values[0, 0]
        r2 = remainder(law, const_field(x), base).values[0, 0]
        assert r1 == pytest.approx(scale ** 2 * r2, rel=1e-3)

    def test_rejects_nonpositive_total(self):
        with pytest.raises(ValueError, match="total density"):
            remainder(GammaLaw(1.4), const_field(-2.0), const_field(1.0))
