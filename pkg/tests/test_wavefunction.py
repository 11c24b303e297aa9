"""Core states: families, grid interpolation, evaluation contracts."""

import numpy as np
import pytest

from pilotwave.errors import ConfigurationError, DomainError
from pilotwave.grid import Grid
from pilotwave.wavefunction import (GridWaveFunction, ParametricWaveFunction,
                                    evaluate)


def gaussian_1d(**kw):
    params = dict(center=[0.0], sigma=1.0, k0=[0.0], m=1.0)
    params.update(kw)
    return ParametricWaveFunction("gaussian_packet", params, masses=[params["m"]])


class TestPlaneWave:
    def test_phase_zero_at_origin(self):
        psi = ParametricWaveFunction("plane_wave", {"k": [2.0], "m": 1.0}, [1.0])
        v = evaluate(psi, [0.0])
        assert v.shape == (1,)
        np.testing.assert_allclose(v[0], 1.0 + 0.0j, atol=1e-15)

    def test_unit_modulus_everywhere(self):
        psi = ParametricWaveFunction("plane_wave", {"k": [1.0, -2.0, 0.5], "m": 2.0},
                                     [2.0], time=1.3)
        pts = np.random.default_rng(0).normal(size=(50, 3))
        np.testing.assert_allclose(np.abs(psi.evaluate(pts)), 1.0, rtol=1e-14)

    def test_gradient_is_ik_psi(self):
        k = np.array([1.0, -2.0, 0.5])
        psi = ParametricWaveFunction("plane_wave", {"k": k, "m": 2.0}, [2.0])
        pts = np.random.default_rng(1).normal(size=(10, 3))
        g = psi.gradient(pts)
        v = psi.evaluate(pts)
        np.testing.assert_allclose(g, 1j * k[None, :, None] * v[:, None, :],
                                   rtol=1e-13)


class TestGaussianPacket:
    def test_matches_schrodinger_equation(self):
        """Finite-difference check that the closed form solves the free TDSE."""
        psi = gaussian_1d(center=[0.3], sigma=0.8, k0=[1.1])
        pts = np.linspace(-2.5, 3.5, 41)[:, None]
        t0, dt, dx = 0.7, 1e-5, 1e-4
        val = lambda t, x: psi.evaluate(x, t=t)[0]
        dpsi_dt = (val(t0 + dt, pts) - val(t0 - dt, pts)) / (2 * dt)
        lap = (val(t0, pts + dx) - 2 * val(t0, pts) + val(t0, pts - dx)) / dx**2
        residual = 1j * dpsi_dt + 0.5 * lap     # hbar = m = 1
        assert np.max(np.abs(residual)) < 1e-5

    def test_dispersion_of_width(self):
        """Position variance grows as sigma^2 (1 + (hbar t / 2 m sigma^2)^2)."""
        sigma, m, t = 0.6, 1.4, 2.0
        psi = gaussian_1d(sigma=sigma, m=m)
        x = np.linspace(-40, 40, 20001)[:, None]
        rho = psi.density(x, t=t)
        rho /= np.trapezoid(rho, x[:, 0])
        var = np.trapezoid(rho * x[:, 0] ** 2, x[:, 0])
        expected = sigma**2 * (1 + (t / (2 * m * sigma**2)) ** 2)
        np.testing.assert_allclose(var, expected, rtol=1e-6)

    def test_drift(self):
        psi = gaussian_1d(k0=[2.0], m=0.5)
        x = np.linspace(-30, 60, 30001)[:, None]
        t = 3.0
        rho = psi.density(x, t=t)
        mean = np.trapezoid(rho * x[:, 0], x[:, 0]) / np.trapezoid(rho, x[:, 0])
        np.testing.assert_allclose(mean, 2.0 * t / 0.5, rtol=1e-8)


class TestDecayingPair:
    def test_value_at_coincidence_is_prefactor(self):
        # alpha=1, mu=1/2 (m1=m2=1), hbar=1, t=0, x1=x2 -> N (pi hbar / alpha)^{3/2}
        psi = ParametricWaveFunction(
            "decaying_pair", {"alpha": 1.0, "m1": 1.0, "m2": 1.0, "d": 3}, [1.0, 1.0])
        v = evaluate(psi, [0.2, -0.1, 0.4, 0.2, -0.1, 0.4])
        np.testing.assert_allclose(v[0], np.pi ** 1.5, rtol=1e-13)

    def test_density_depends_on_separation_only(self):
        psi = ParametricWaveFunction(
            "decaying_pair", {"alpha": 0.5, "m1": 1.0, "m2": 3.0, "d": 1}, [1.0, 3.0],
            time=0.8)
        a = psi.density(np.array([[0.3, 0.1]]))
        b = psi.density(np.array([[5.3, 5.1]]))
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_total_momentum_annihilates_wave(self):
        """(d/dx1 + d/dx2) psi = 0: the wave depends only on x1 - x2."""
        psi = ParametricWaveFunction(
            "decaying_pair", {"alpha": 0.7, "m1": 1.0, "m2": 2.0, "d": 3},
            [1.0, 2.0], time=1.1)
        pts = np.random.default_rng(3).normal(size=(20, 6))
        h = 1e-5
        for a in range(3):
            e = np.zeros(6)
            e[a] = h
            e[a + 3] = h
            fd = (psi.evaluate(pts + e) - psi.evaluate(pts - e)) / (2 * h)
            assert np.max(np.abs(fd)) < 1e-8

    def test_width_envelope_grows_linearly_at_late_times(self):
        psi = ParametricWaveFunction(
            "decaying_pair", {"alpha": 0.1, "m1": 1.0, "m2": 1.0, "d": 1}, [1.0, 1.0])
        # |psi|^2 at fixed separation relative to peak follows the complex width
        def width(t):
            beta = 0.1 + 0.5j * t / 0.5
            return abs(beta)
        assert width(200.0) / width(100.0) == pytest.approx(2.0, rel=1e-3)


class TestSuperpositionAndSpinor:
    def test_superposition_linear(self):
        p1 = {"k": [1.0], "m": 1.0}
        p2 = {"k": [-2.0], "m": 1.0}
        sup = ParametricWaveFunction(
            "superposition",
            {"components": [(0.5, "plane_wave", p1), (0.5j, "plane_wave", p2)]},
            [1.0], time=0.3)
        w1 = ParametricWaveFunction("plane_wave", p1, [1.0], time=0.3)
        w2 = ParametricWaveFunction("plane_wave", p2, [1.0], time=0.3)
        pts = np.linspace(-1, 1, 7)[:, None]
        np.testing.assert_allclose(
            sup.evaluate(pts), 0.5 * w1.evaluate(pts) + 0.5j * w2.evaluate(pts),
            rtol=1e-14)

    def test_spinor_product_shape(self):
        psi = ParametricWaveFunction(
            "spinor_product",
            {"scalar": "gaussian_packet",
             "scalar_params": {"center": [0.0, 0.0], "sigma": 1.0, "k0": [0.0, 0.0],
                               "m": 1.0},
             "chi": [1.0, 0.0]},
            [1.0])
        assert psi.spin_dim == 2
        v = psi.evaluate(np.zeros((3, 2)))
        assert v.shape == (2, 3)
        np.testing.assert_allclose(v[1], 0.0)


class TestGridState:
    def test_exact_at_nodes(self):
        g = Grid([(-10.0, 10.0)], [2001])
        x = g.axes[0]
        vals = np.exp(-x**2 / 2) / np.pi**0.25
        psi = GridWaveFunction(g, vals, [1.0])
        v = evaluate(psi, [0.0])
        np.testing.assert_allclose(v[0], np.pi**-0.25, atol=1e-8)

    def test_norm_and_normalize(self):
        g = Grid([(-12.0, 12.0)], [1024])
        x = g.axes[0]
        psi = GridWaveFunction(g, 3.7 * np.exp(-x**2 / 2), [1.0]).normalized()
        assert abs(psi.norm() - 1.0) < 1e-9

    def test_interpolation_outside_domain_raises(self):
        g = Grid([(-1.0, 1.0)], [16])
        psi = GridWaveFunction(g, np.ones(16), [1.0])
        with pytest.raises(DomainError) as err:
            psi.evaluate(np.array([[1.5]]))
        assert err.value.coordinate == pytest.approx(1.5)

    def test_interpolation_quadratic_convergence(self):
        """Halving the spacing cuts the max interpolation error by >= 3.5x."""
        ref = gaussian_1d(sigma=0.9, k0=[1.3])
        probes = np.random.default_rng(5).uniform(-3, 3, size=(400, 1))
        errs = []
        for n in (501, 1001):
            g = Grid([(-8.0, 8.0)], [n])
            psi = GridWaveFunction.sample(ref, g)
            errs.append(np.max(np.abs(psi.evaluate(probes) - ref.evaluate(probes))))
        assert errs[0] / errs[1] >= 3.5

    def test_memory_budget_rejected(self):
        with pytest.raises(ConfigurationError):
            Grid([(-1, 1)] * 3, [4096, 4096, 4096])

    def test_evaluation_does_not_mutate(self):
        g = Grid([(-2.0, 2.0)], [64])
        psi = GridWaveFunction(g, np.exp(-g.axes[0] ** 2), [1.0]).normalized()
        before = psi.values.copy()
        psi.evaluate(np.array([[0.3]]))
        psi.density(np.array([[0.1]]))
        np.testing.assert_array_equal(psi.values, before)
        assert abs(psi.norm() - 1.0) < 1e-9
