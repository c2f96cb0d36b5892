import math

import numpy as np
from django.test import SimpleTestCase, tag

from critical_metrology.exceptions import DomainError, PoleError
from dynamics.simulate import integrate
from dynamics.state import IntegratorConfig, SystemParams
from schedules.laws import from_onoff_solution

from .large_r import large_r_squeezing, onoff_threshold_profile
from .optimizer import (
    critical_time,
    gamma_exponent,
    inverse_on_time,
    n_opt_asymptotic,
    normalization_T,
    off_time,
    on_time,
    optimal_tilde_phi,
    optimize_n,
    phi_star,
    r_max_asymptotic,
    r_pred,
    solve_fixed_n,
    solve_fixed_n_numeric,
    squeeze,
)


class SegmentFormulaTest(SimpleTestCase):
    def test_critical_segments(self):
        """Test on-time, off-time and squeezing at eps_max = omega"""
        self.assertAlmostEqual(on_time(math.pi / 2, 1.0), 1.0)
        self.assertAlmostEqual(off_time(math.pi / 2), 0.75 * math.pi)
        self.assertAlmostEqual(squeeze(math.pi / 2, 1.0), 0.5 * math.log(2.0))

    def test_poles(self):
        """Test phi = pi is a pole of the critical on-segment"""
        with self.assertRaises(PoleError):
            on_time(math.pi, 1.0)
        with self.assertRaises(PoleError):
            squeeze(math.pi, 1.0)

    def test_free_rotation_limit(self):
        """Test eps_max = 0 reduces the on-segment to rotation at 2 omega"""
        self.assertAlmostEqual(on_time(1.0, 0.0), 0.5)
        self.assertEqual(squeeze(1.0, 0.0), 0.0)

    def test_inverse_on_time(self):
        """Test the phase reached after an on-time inverts on_time"""
        for eps_max in (0.3, 0.7, 1.0):
            duration = on_time(2.0, eps_max)
            self.assertAlmostEqual(inverse_on_time(duration, eps_max), 2.0, places=12)
        self.assertIsNone(inverse_on_time(100.0, 0.5))

    def test_eps_max_domain(self):
        """Test eps_max above omega is rejected"""
        with self.assertRaises(DomainError):
            on_time(1.0, 1.5)

    def test_optimal_final_angle(self):
        """Test sin(tilde_phi) = 2 / tan(phi_n / 2) on the upper branch"""
        phi_n = 2.9
        tilde = optimal_tilde_phi(phi_n)
        self.assertGreater(tilde, math.pi / 2)
        self.assertAlmostEqual(math.sin(tilde), 2.0 / math.tan(phi_n / 2), places=12)


class FixedWindingTest(SimpleTestCase):
    def test_normalization(self):
        """Test the solved protocol spends exactly T"""
        for T, eps_max in ((40.0, 1.0), (12.0, 0.7), (10.0, 0.7)):
            solution = solve_fixed_n(T, 2, eps_max)
            self.assertTrue(solution.feasible, (T, eps_max))
            duration = normalization_T(2, solution.phi_n, solution.tilde_phi_n, eps_max)
            self.assertAlmostEqual(duration, T, places=8)
            self.assertAlmostEqual(solution.on_time * 2 + solution.off_time * 2 + solution.final_time, T, places=8)

    def test_subcritical_window_is_bounded(self):
        """Test a subcritical cycle lasts at most pi / sqrt(1 - eps_max/omega), so long windows are infeasible"""
        self.assertFalse(solve_fixed_n(30.0, 2, 0.7).feasible)
        self.assertTrue(solve_fixed_n(30.0, 5, 0.7).feasible)

    def test_critical_threshold_bracket(self):
        """Test the smallest switching angle with an interior optimum, tan(phi_n/2) = 2"""
        self.assertAlmostEqual(optimal_tilde_phi(2.0 * math.atan(2.0)), math.pi / 2, places=6)
        for n in (1, 2, 3):
            self.assertTrue(solve_fixed_n(8.0 * n, n, 1.0).feasible)

    def test_numeric_search_is_optimal(self):
        """Test the subcritical search beats every phi_n on a fine grid with the same T"""
        T, n, eps_max = 12.0, 2, 0.7
        solution = solve_fixed_n_numeric(T, n, eps_max)
        self.assertTrue(solution.feasible)
        self.assertAlmostEqual(normalization_T(n, solution.phi_n, solution.tilde_phi_n, eps_max), T, places=8)
        for phi in np.linspace(0.01, 2.0 * math.pi - 0.01, 400):
            residual = T - n * (on_time(phi, eps_max) + off_time(phi))
            tilde = inverse_on_time(residual, eps_max) if residual >= 0.0 else None
            if tilde is not None:
                self.assertGreaterEqual(solution.r_pred, r_pred(n, phi, tilde, eps_max) - 1e-9)

    def test_single_segment(self):
        """Test n = 0 is the critical quench"""
        solution = solve_fixed_n(3.0, 0, 1.0)
        self.assertAlmostEqual(solution.tilde_phi_n, 2.0 * math.atan(3.0))
        self.assertAlmostEqual(solution.r_pred, -math.log(math.cos(math.atan(3.0))))

    def test_infeasible(self):
        """Test too many cycles for a short T is infeasible"""
        solution = solve_fixed_n(5.0, 3, 1.0)
        self.assertFalse(solution.feasible)
        self.assertIsNone(solution.to_dict()["phi_n"])

    def test_numeric_matches_critical_closed_form(self):
        """Test the generic search reproduces the closed form near eps_max = omega"""
        closed = solve_fixed_n(30.0, 1, 1.0)
        numeric = solve_fixed_n(30.0, 1, 1.0 - 1e-9)
        self.assertAlmostEqual(numeric.r_pred, closed.r_pred, places=4)


class AsymptoticConstantsTest(SimpleTestCase):
    def test_phi_star(self):
        """Test the asymptotic switching angle"""
        self.assertAlmostEqual(phi_star(), 2.664, delta=0.005)

    def test_gamma_exponent(self):
        """Test Gamma at the critical point and its closed form 4 / tan(phi*/2)"""
        self.assertAlmostEqual(gamma_exponent(1.0), 0.9745, delta=0.0005)
        self.assertAlmostEqual(gamma_exponent(1.0), 4.0 / math.tan(phi_star() / 2), places=6)
        self.assertEqual(gamma_exponent(0.0), 0.0)

    def test_gamma_increases_with_eps_max(self):
        """Test Gamma grows strictly with eps_max"""
        values = [gamma_exponent(e) for e in np.linspace(0.05, 1.0, 20)]
        self.assertTrue(all(b > a for a, b in zip(values, values[1:])))

    def test_linear_laws(self):
        """Test the asymptotic winding number and squeezing coefficients"""
        self.assertAlmostEqual(n_opt_asymptotic(100.0) / 100.0, 0.1690, delta=0.0005)
        self.assertAlmostEqual(r_max_asymptotic(100.0) / 100.0, 0.2436, delta=0.0005)


class OptimalWindingTest(SimpleTestCase):
    def test_optimize_n_grows_linearly(self):
        """Test the optimal winding number and squeezing grow linearly in T"""
        best = {T: optimize_n(T, 1.0)[0] for T in (40.0, 60.0, 80.0)}
        for T, solution in best.items():
            self.assertTrue(solution.feasible)
            self.assertAlmostEqual(solution.r_pred / T, 0.2436, delta=0.02)
            self.assertAlmostEqual(solution.n / T, 0.169, delta=0.025)
        slope = (best[80.0].r_pred - best[40.0].r_pred) / 40.0
        self.assertAlmostEqual(slope, 0.2436, delta=0.005)
        self.assertAlmostEqual((best[80.0].n - best[40.0].n) / 40.0, 0.169, delta=0.035)

    def test_best_squeezing_grows_with_T(self):
        """Test the optimal predicted squeezing never decreases with the available time"""
        values = [optimize_n(T, 1.0)[0].r_pred for T in np.linspace(2.0, 30.0, 29)]
        self.assertTrue(all(b >= a - 1e-12 for a, b in zip(values, values[1:])))

    def test_simulated_protocol_matches_prediction(self):
        """Test the integrated optimal protocol winds exactly n times and reaches r_pred within 10%"""
        for T in (50.0, 60.0):
            solution = optimize_n(T, 1.0)[0]
            trajectory = integrate(SystemParams(), from_onoff_solution(solution), T, IntegratorConfig())
            self.assertEqual(trajectory.winding, solution.n)
            self.assertAlmostEqual(trajectory.final.r / solution.r_pred, 1.0, delta=0.1)

    def test_scan_covers_every_n(self):
        """Test the scan reports one solution per candidate winding number"""
        best, scan = optimize_n(20.0, 1.0, n_max=4)
        self.assertEqual([s.n for s in scan], [0, 1, 2, 3, 4])
        self.assertAlmostEqual(best.r_pred, max(s.r_pred for s in scan if s.feasible), places=8)


class WindingTransitionTest(SimpleTestCase):
    def test_first_transition(self):
        """Test the 1 -> 2 transition: squeezing ties while the total phase jumps"""
        T_c = critical_time(1, 1.0)
        one, two = solve_fixed_n(T_c, 1, 1.0), solve_fixed_n(T_c, 2, 1.0)
        self.assertAlmostEqual(one.r_pred, two.r_pred, delta=1e-6)
        self.assertGreaterEqual(two.total_phase - one.total_phase, math.pi / 2)
        self.assertEqual(optimize_n(T_c - 0.05, 1.0)[0].n, 1)
        self.assertEqual(optimize_n(T_c + 0.05, 1.0)[0].n, 2)


class LargeSqueezingModelTest(SimpleTestCase):
    def test_constant_profile_matches_segment_formulas(self):
        """Test a constant on-profile reproduces on_time and squeeze"""
        phi = np.linspace(0.0, 2.0, 100001)
        T, r = large_r_squeezing(np.full(phi.shape, 0.8), phi)
        self.assertAlmostEqual(T, on_time(2.0, 0.8), places=8)
        self.assertAlmostEqual(r, squeeze(2.0, 0.8), places=8)

    def test_profile_outside_symmetric_phase(self):
        """Test profiles above omega are rejected"""
        with self.assertRaises(DomainError):
            large_r_squeezing(np.full(3, 1.2), np.linspace(0.0, 1.0, 3))

    def test_threshold_profile_beats_random_profiles(self):
        """Test the on-off threshold law squeezes at least as much as smooth random laws"""
        eps_max = 0.8
        for seed in range(10):
            rng = np.random.default_rng(seed)
            Phi = float(rng.uniform(2.0, 5.0)) * 2.0 * math.pi
            phi = np.linspace(0.0, Phi, 200001)
            modes = sum(
                rng.normal() * np.sin(k * phi / 4.0 + rng.uniform(0.0, 2.0 * math.pi)) for k in range(1, 6)
            )
            eps = eps_max / (1.0 + np.exp(-modes))
            T, r = large_r_squeezing(eps, phi)
            _, r_threshold = onoff_threshold_profile(Phi, T, eps_max)
            self.assertGreaterEqual(r_threshold, r - 1e-6)


@tag("slow")
class OptimalWindingAcceptanceTest(SimpleTestCase):
    def test_transition_squeezing_is_continuous(self):
        """Test the maximal squeezing is continuous across the first transition"""
        T_c = critical_time(1, 1.0)
        below = optimize_n(T_c - 1e-5, 1.0)[0]
        above = optimize_n(T_c + 1e-5, 1.0)[0]
        self.assertAlmostEqual(below.r_pred, above.r_pred, delta=2e-5)
        self.assertGreaterEqual(above.total_phase - below.total_phase, math.pi / 2)

    def test_linear_laws_at_long_times(self):
        """Test n/T, r/T and 4r/(omega T) approach 0.169, 0.2436 and Gamma at omega T = 250"""
        T = 250.0
        best = optimize_n(T, 1.0)[0]
        self.assertAlmostEqual(best.n / T, 0.169, delta=0.009)
        self.assertAlmostEqual(best.r_pred / T, 0.2436, delta=0.005)
        self.assertAlmostEqual(4.0 * best.r_pred / T / gamma_exponent(1.0), 1.0, delta=0.02)
