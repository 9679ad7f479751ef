"""Tests for the theta-function kernel."""

import mpmath
import numpy as np
import pytest

from src.rw_integrals.elliptic_kernel import (
    distance_to_lattice,
    lattice_reduce,
    rho,
    s_func,
    theta1,
    theta1_d1,
    theta1_log_multiplier,
)
from src.rw_integrals.models.exceptions import NearSingular, ValidationError

TAUS = (1j, 0.3 + 1.2j, -0.25 + 0.8j)


def _mp_theta1(u: complex, tau: complex, derivative: int = 0) -> complex:
    with mpmath.workdps(30):
        q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(tau))
        value = mpmath.jtheta(1, mpmath.pi * mpmath.mpc(u), q, derivative)
        return complex(value * mpmath.pi ** derivative)


def _cell_points(rng, tau, count):
    x = rng.uniform(0, 1, count)
    y = rng.uniform(0, 1, count)
    return x + y * tau


class TestTheta1:
    """theta_1 and its derivative against mpmath."""

    @pytest.mark.parametrize("tau", TAUS)
    def test_matches_mpmath(self, tau, rng):
        """Series values agree with mpmath.jtheta on the fundamental cell."""
        for u in _cell_points(rng, tau, 40):
            expected = _mp_theta1(u, tau)
            assert abs(theta1(u, tau) - expected) <= 1e-11 * max(1.0, abs(expected))

    @pytest.mark.parametrize("tau", TAUS)
    def test_derivative_matches_mpmath(self, tau, rng):
        """theta_1' agrees with pi * jtheta(1, pi u, q, 1)."""
        for u in _cell_points(rng, tau, 40):
            expected = _mp_theta1(u, tau, derivative=1)
            assert abs(theta1_d1(u, tau) - expected) <= 1e-10 * max(1.0, abs(expected))

    def test_far_arguments_use_quasi_periodicity(self):
        """Arguments several periods away still match mpmath."""
        tau = 0.3 + 1.2j
        for u in (0.37 + 0.11j + 3 - 2 * tau, 0.2 + 0.4j + 4 * tau, -5.6 + 0.3j):
            expected = _mp_theta1(u, tau)
            assert abs(theta1(u, tau) - expected) <= 1e-10 * max(1.0, abs(expected))

    def test_odd(self, rng):
        tau = 0.3 + 1.2j
        for u in _cell_points(rng, tau, 20):
            assert abs(theta1(-u, tau) + theta1(u, tau)) < 1e-12 * max(1.0, abs(theta1(u, tau)))

    def test_quasi_periodicity(self, rng):
        """theta_1(u + 1) = -theta_1(u) and theta_1(u + tau) = -exp(-pi i (tau + 2u)) theta_1(u)."""
        tau = -0.25 + 0.8j
        for u in _cell_points(rng, tau, 20):
            value = theta1(u, tau)
            scale = max(1.0, abs(value))
            assert abs(theta1(u + 1, tau) + value) < 1e-12 * scale
            shifted = -np.exp(-1j * np.pi * (tau + 2 * u)) * value
            assert abs(theta1(u + tau, tau) - shifted) < 1e-11 * max(scale, abs(shifted))

    def test_array_input(self, rng):
        """Arrays are evaluated elementwise; scalars come back as Python complex."""
        tau = 1j
        u = _cell_points(rng, tau, 12).reshape(3, 4)
        values = theta1(u, tau)
        assert values.shape == (3, 4)
        assert values[1, 2] == pytest.approx(theta1(complex(u[1, 2]), tau), rel=1e-14)
        assert isinstance(theta1(0.3 + 0.2j, tau), complex)

    def test_zero_on_the_lattice(self):
        assert abs(theta1(0j, 1j)) < 1e-15
        assert abs(theta1(2 + 1j, 1j)) < 1e-12

    def test_invalid_tau(self):
        with pytest.raises(ValidationError, match="strictly positive imaginary part"):
            theta1(0.3, 0.5 + 0j)

    def test_log_multiplier(self):
        """The unit-shift logarithms reproduce the quasi-periodicity factors."""
        tau, v = 0.3 + 1.2j, 0.21 + 0.17j
        for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ratio = theta1(v + a + b * tau, tau) / theta1(v, tau)
            assert np.exp(theta1_log_multiplier(v, tau, a, b)) == pytest.approx(ratio, rel=1e-11)

    def test_log_multiplier_rejects_double_shift(self):
        with pytest.raises(ValueError, match="single unit shifts"):
            theta1_log_multiplier(0.1, 1j, 1, 1)


class TestRhoAndS:
    """rho = theta_1'/theta_1 and the kernel s(u; lambda)."""

    def test_rho_matches_ratio(self, rng):
        tau = 0.3 + 1.2j
        for u in _cell_points(rng, tau, 20):
            expected = _mp_theta1(u, tau, 1) / _mp_theta1(u, tau)
            assert abs(rho(u, tau) - expected) < 1e-9 * max(1.0, abs(expected))

    def test_rho_periods(self):
        tau, u = 0.3 + 1.2j, 0.41 + 0.23j
        assert rho(u + 1, tau) == pytest.approx(rho(u, tau), rel=1e-12)
        assert rho(u + tau, tau) == pytest.approx(rho(u, tau) - 2j * np.pi, rel=1e-12)

    def test_rho_near_singular(self):
        with pytest.raises(NearSingular, match="rho"):
            rho(0j, 1j)
        with pytest.raises(NearSingular) as exc_info:
            rho(1 + 1j + 1e-10, 1j)
        assert exc_info.value.details["distance"] < 1e-8

    def test_s_multipliers(self):
        """s is 1-periodic and picks up exp(2 pi i lambda) under u -> u + tau."""
        tau, u, lam = 0.3 + 1.2j, 0.37 + 0.21j, 0.31 + 0.27j
        value = s_func(u, lam, tau)
        assert s_func(u + 1, lam, tau) == pytest.approx(value, rel=1e-12)
        assert s_func(u + tau, lam, tau) == pytest.approx(np.exp(2j * np.pi * lam) * value, rel=1e-11)

    def test_s_reflection(self):
        tau, u, lam = 1j, 0.37 + 0.21j, 0.31 + 0.27j
        assert s_func(-u, lam, tau) == pytest.approx(-s_func(u, -lam, tau), rel=1e-12)

    def test_s_residue_at_zero(self):
        """u s(u; lambda) -> 1 as u -> 0."""
        lam = 0.31 + 0.27j
        for h in (1e-6, 1e-6j):
            assert abs(h * s_func(h, lam, 1j) - 1) < 1e-4

    def test_s_rejects_lattice_lambda(self):
        with pytest.raises(NearSingular, match="lambda"):
            s_func(0.3 + 0.2j, 1.0, 1j)

    def test_s_broadcasts(self):
        u = np.array([0.1 + 0.2j, 0.3 + 0.4j])
        lam = np.array([[0.31 + 0.27j], [0.58 + 0.14j]])
        values = s_func(u, lam, 1j)
        assert values.shape == (2, 2)
        assert values[1, 0] == pytest.approx(s_func(complex(u[0]), complex(lam[1, 0]), 1j), rel=1e-14)


class TestLattice:
    """Lattice reduction and distances."""

    def test_reduce_reconstructs(self):
        tau = 0.3 + 1.2j
        for u in (3.7 - 2.1j, -4.2 + 5.5j, 0.1 + 0.1j):
            reduction = lattice_reduce(u, tau)
            assert reduction.reconstruct(tau) == pytest.approx(u, abs=1e-12)
            y = reduction.u0.imag / tau.imag
            x = reduction.u0.real - y * tau.real
            assert 0 <= x < 1 and 0 <= y < 1

    def test_distance_to_lattice(self):
        tau = 1j
        assert distance_to_lattice(0.5, tau) == pytest.approx(0.5)
        assert distance_to_lattice(1 + tau + 1e-3, tau) == pytest.approx(1e-3, rel=1e-9)
        distances = distance_to_lattice(np.array([0.0, 0.25j]), tau)
        assert distances == pytest.approx([0.0, 0.25])
