import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from critical_metrology.exceptions import DomainError
from dynamics.simulate import integrate
from dynamics.state import THETA, X, IntegratorConfig, SystemParams, Trajectory
from schedules.laws import Constant

from .engine import accumulators_from_samples, fit_exponent, fit_power_law, points_from_csv, qfi_from_trajectory


class QfiFromTrajectoryTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_vacuum_carries_no_information(self):
        """Test an undriven vacuum has F = 0"""
        result = qfi_from_trajectory(integrate(self.params, Constant(0.0), 4.0, IntegratorConfig()))
        self.assertEqual(result.value, 0.0)
        self.assertEqual(result.envelope, 0.0)

    def test_quench_below_envelope(self):
        """Test F never exceeds 2 (int sinh 2r dt)^2"""
        result = qfi_from_trajectory(integrate(self.params, Constant(1.0), 3.0, IntegratorConfig()))
        self.assertGreater(result.value, 0.0)
        self.assertLessEqual(result.value, result.envelope * (1.0 + 1e-12))
        self.assertEqual(result.winding, 0)
        self.assertAlmostEqual(math.cosh(2.0 * result.r_final), 5.5, delta=1e-7)

    def test_trapezoid_matches_integrated_accumulators(self):
        """Test J and int sinh^2 2r dt recomputed from fine samples match the integrated ones to 1e-6"""
        trajectory = integrate(self.params, Constant(1.0), 3.0, IntegratorConfig(output_stride=5e-4))
        j, a = accumulators_from_samples(trajectory)
        result = qfi_from_trajectory(trajectory)
        self.assertLess(abs(j[-1] - result.j_final) / abs(result.j_final), 1e-6)
        self.assertAlmostEqual(a[-1] / trajectory.final.a_acc, 1.0, delta=1e-6)

    def test_to_dict(self):
        """Test the result serializes J by its parts"""
        record = qfi_from_trajectory(integrate(self.params, Constant(0.5), 2.0, IntegratorConfig())).to_dict()
        self.assertEqual(set(record), {"qfi", "envelope", "T", "winding", "r_final", "j_re", "j_im"})
        self.assertEqual(record["T"], 2.0)


def synthetic_trajectory(times, sinh2r, theta):
    states = np.zeros((times.size, 7))
    states[:, X] = sinh2r
    states[:, THETA] = theta
    return Trajectory(SystemParams(), "synthetic", times, states, np.zeros(times.size))


class SyntheticIntegrandTest(SimpleTestCase):
    def test_constant_integrand(self):
        """Test sinh 2r = 1 and theta = 0 over T = 1 give F = 2"""
        times = np.linspace(0.0, 1.0, 11)
        j, _ = accumulators_from_samples(synthetic_trajectory(times, 1.0, 0.0))
        self.assertAlmostEqual(2.0 * abs(j[-1]) ** 2, 2.0, places=12)

    def test_linear_phase(self):
        """Test theta = pi t / T gives F = 2 s^2 (2T/pi)^2"""
        T, s = 3.0, 1.5
        times = np.linspace(0.0, T, 20001)
        j, _ = accumulators_from_samples(synthetic_trajectory(times, s, math.pi * times / T))
        self.assertAlmostEqual(2.0 * abs(j[-1]) ** 2 / (2.0 * s * s * (2.0 * T / math.pi) ** 2), 1.0, places=7)

    def test_global_phase_shift(self):
        """Test F is unchanged when the same constant is added to theta everywhere"""
        times = np.linspace(0.0, 2.0, 401)
        sinh2r = np.sinh(times)
        theta = 0.3 * times**2
        j, _ = accumulators_from_samples(synthetic_trajectory(times, sinh2r, theta))
        shifted, _ = accumulators_from_samples(synthetic_trajectory(times, sinh2r, theta + 0.7))
        self.assertAlmostEqual(abs(shifted[-1]) / abs(j[-1]), 1.0, places=12)


class ScalingFitTest(SimpleTestCase):
    def test_power_law(self):
        """Test the log-log slope of an exact power law"""
        points = [(T, 3.0 * T**2) for T in np.linspace(1.0, 20.0, 12)]
        fit = fit_power_law(points, (1.0, 20.0))
        self.assertAlmostEqual(fit.slope, 2.0, places=10)
        self.assertAlmostEqual(fit.intercept, math.log(3.0), places=10)
        self.assertLess(fit.residual_rms, 1e-10)
        self.assertEqual(fit.points, 12)

    def test_exponent(self):
        """Test the semi-log slope of an exact exponential"""
        points = [(T, math.exp(0.5 * T)) for T in range(10, 31)]
        fit = fit_exponent(points, (15.0, 25.0))
        self.assertAlmostEqual(fit.slope, 0.5, places=10)
        self.assertEqual(fit.points, 11)
        self.assertEqual(fit.to_dict()["window"], [15.0, 25.0])

    def test_window_too_small(self):
        """Test fits refuse windows with fewer than five points"""
        points = [(T, T**2) for T in range(1, 10)]
        with self.assertRaises(DomainError):
            fit_power_law(points, (1.0, 4.0))

    def test_degenerate_window(self):
        """Test an empty or reversed window is a domain error"""
        points = [(T, T**2) for T in range(1, 10)]
        with self.assertRaises(DomainError):
            fit_power_law(points, (5.0, 5.0))
        with self.assertRaises(DomainError):
            fit_exponent(points, (9.0, 1.0))

    def test_nonpositive_values(self):
        """Test logarithmic fits need positive data"""
        points = [(T, 0.0) for T in range(1, 10)]
        with self.assertRaises(DomainError):
            fit_exponent(points, (1.0, 9.0))


class PointsFromCsvTest(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / "sweep.csv"
        self.path.write_text(
            "T,n,eps_max,qfi\n"
            "10.0,2,1.0,5.5\n"
            "20.0,2,1.0,\n"
            "30.0,2,1.0,60.25\n"
            "10.0,3,1.0,7.0\n",
            encoding="utf-8",
        )

    def tearDown(self):
        self.directory.cleanup()

    def test_filters_and_blanks(self):
        """Test rows are filtered numerically and blank values are skipped"""
        points = points_from_csv(self.path, filters={"n": "2"})
        self.assertEqual(points, [(10.0, 5.5), (30.0, 60.25)])

    def test_missing_column(self):
        """Test a missing column names itself"""
        with self.assertRaisesMessage(DomainError, "'gamma'"):
            points_from_csv(self.path, filters={"gamma": "0.1"})
