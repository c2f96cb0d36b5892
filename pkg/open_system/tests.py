import math

import numpy as np
from django.test import SimpleTestCase

from critical_metrology.exceptions import DomainError
from dynamics.simulate import integrate
from dynamics.state import IntegratorConfig, SystemParams
from onoff.optimizer import solve_fixed_n
from qfi.engine import qfi_from_trajectory
from schedules.laws import Constant, from_onoff_solution

from .covariance import (
    COVARIANCE_HEADERS,
    CovarianceState,
    OpenParams,
    cov_rates,
    covariance_from,
    covariance_to_csv,
    instantaneous_qfi,
    integrate_mu_r_phi,
    integrate_open,
    qfi_open_bound,
    qfi_open_bound_tight,
)


class CovarianceAlgebraTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_vacuum_is_stationary(self):
        """Test the undriven vacuum does not move at zero temperature"""
        state = CovarianceState.from_moments(0.0, 0.5, 0.5, 0.0)
        for rate in cov_rates(state, 0.0, self.params, OpenParams(gamma=0.4, nbar=0.0)):
            self.assertAlmostEqual(rate, 0.0, places=15)

    def test_thermal_fixed_point(self):
        """Test (nbar + 1/2) I is stationary under the thermal dissipator"""
        state = CovarianceState.from_moments(0.0, 1.5, 1.5, 0.0)
        for rate in cov_rates(state, 0.0, self.params, OpenParams(gamma=0.3, nbar=1.0)):
            self.assertAlmostEqual(rate, 0.0, places=15)

    def test_moments_round_trip(self):
        """Test (mu, r, phi) survive the trip through the covariance moments"""
        vxx, vpp, vxp = covariance_from(0.7, 0.8, 2.0)
        state = CovarianceState.from_moments(0.0, vxx, vpp, vxp)
        self.assertAlmostEqual(state.mu, 0.7, places=10)
        self.assertAlmostEqual(state.r, 0.8, places=10)
        self.assertAlmostEqual(state.phi, 2.0, places=10)

    def test_instantaneous_qfi_limits(self):
        """Test F_inst is 2 sinh^2 2r for pure states and tends to 4 sinh^2 2r when hot"""
        pure = CovarianceState.from_moments(0.0, *covariance_from(0.5, 0.4, 1.0))
        self.assertAlmostEqual(instantaneous_qfi(pure), 2.0 * math.sinh(0.8) ** 2, places=12)
        hot = CovarianceState.from_moments(0.0, *covariance_from(1e6, 0.4, 1.0))
        self.assertAlmostEqual(instantaneous_qfi(hot) / math.sinh(0.8) ** 2, 4.0, places=5)

    def test_negative_rates_rejected(self):
        """Test gamma and nbar must be non-negative"""
        with self.assertRaises(DomainError):
            OpenParams(gamma=-0.1)


class OpenIntegrationTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()
        self.config = IntegratorConfig()

    def test_lossless_quench(self):
        """Test gamma = 0 keeps the state pure and reproduces the free-particle moments"""
        states = integrate_open(self.params, OpenParams(), Constant(1.0), 3.0, self.config)
        final = states[-1]
        self.assertAlmostEqual(final.mu, 0.5, places=10)
        self.assertAlmostEqual(final.vxx, 5.0, delta=1e-8)
        self.assertAlmostEqual(final.vpp, 0.5, delta=1e-10)
        self.assertAlmostEqual(final.vxp, 1.5, delta=1e-8)
        self.assertAlmostEqual(math.cosh(2.0 * final.r), 5.5, delta=1e-7)

    def test_lossless_matches_closed_dynamics(self):
        """Test the moments at gamma = 0 land on the closed-system phase plane"""
        schedule = from_onoff_solution(solve_fixed_n(15.0, 1, 1.0))
        closed = integrate(self.params, schedule, 15.0, self.config).final
        open_final = integrate_open(self.params, OpenParams(), schedule, 15.0, self.config)[-1]
        self.assertAlmostEqual(open_final.sinh2r / closed.sinh2r, 1.0, delta=1e-7)
        self.assertAlmostEqual(open_final.phi, closed.phi_unwrapped, delta=1e-7)

    def test_thermal_relaxation(self):
        """Test an undriven vacuum relaxes to (nbar + 1/2) I at rate gamma"""
        open_params = OpenParams(gamma=0.5, nbar=2.0)
        final = integrate_open(self.params, open_params, Constant(0.0), 4.0, self.config)[-1]
        expected = 2.5 + (0.5 - 2.5) * math.exp(-0.5 * 4.0)
        self.assertAlmostEqual(final.vxx, expected, places=9)
        self.assertAlmostEqual(final.vpp, expected, places=9)
        self.assertAlmostEqual(final.mu, expected, places=9)
        self.assertAlmostEqual(final.r, 0.0, places=9)

    def test_bounds_dominate_lossless_qfi(self):
        """Test 4T int sinh^2 2r dt and T int F_inst dt both bound the closed QFI"""
        schedule = from_onoff_solution(solve_fixed_n(12.0, 1, 1.0))
        qfi = qfi_from_trajectory(integrate(self.params, schedule, 12.0, self.config)).value
        states = integrate_open(self.params, OpenParams(), schedule, 12.0, self.config)
        bound, tight = qfi_open_bound(states, 12.0), qfi_open_bound_tight(states, 12.0)
        self.assertGreaterEqual(tight, qfi)
        self.assertLessEqual(tight, bound)

    def test_loss_reduces_bound(self):
        """Test dissipation lowers the bound"""
        schedule = from_onoff_solution(solve_fixed_n(12.0, 1, 1.0))
        lossless = integrate_open(self.params, OpenParams(), schedule, 12.0, self.config)
        lossy = integrate_open(self.params, OpenParams(gamma=0.2), schedule, 12.0, self.config)
        self.assertLess(qfi_open_bound(lossy, 12.0), qfi_open_bound(lossless, 12.0))

    def test_mu_r_phi_cross_check(self):
        """Test the (mu, r, phi) equations agree with the covariance integration away from r = 0"""
        params, open_params = self.params, OpenParams(gamma=0.1, nbar=0.5)
        initial = covariance_from(0.6, 0.5, 1.0)
        states = integrate_open(params, open_params, Constant(1.0), 3.0, self.config, initial=initial)
        times = np.array([s.t for s in states])
        reference = integrate_mu_r_phi(params, open_params, Constant(1.0), 3.0, (0.6, 0.5, 1.0), times)
        for state, (mu, r, phi) in zip(states, reference):
            self.assertAlmostEqual(state.mu / mu, 1.0, delta=1e-6)
            self.assertAlmostEqual(state.r / r, 1.0, delta=1e-6)
            self.assertAlmostEqual(state.phi, phi, delta=1e-6)

    def test_csv(self):
        """Test the covariance CSV header and running bound column"""
        states = integrate_open(self.params, OpenParams(gamma=0.1), Constant(1.0), 1.0, self.config.with_stride(0.5))
        lines = covariance_to_csv(states).strip().split("\n")
        self.assertEqual(lines[0], ",".join(COVARIANCE_HEADERS))
        self.assertEqual(len(lines), 4)
        self.assertEqual(float(lines[1].split(",")[-1]), 0.0)
