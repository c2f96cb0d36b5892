import tempfile
from pathlib import Path

from django.test import SimpleTestCase, tag
from numpy.polynomial import polynomial as P

from critical_metrology.exceptions import DomainError
from dynamics.simulate import integrate
from dynamics.state import IntegratorConfig, SystemParams
from onoff.optimizer import solve_fixed_n
from schedules.laws import Constant, from_onoff_solution

from .audits import audit_csv, audit_fixed_n, audit_monotone, audit_random, audit_trajectory
from .checks import (
    REPORT_HEADERS,
    BoundReport,
    lemma_cycle_check,
    reports_to_csv,
    thm1_check,
    thm1_leading_coeff,
    thm1_poly_bound,
    thm1_poly_coefficients,
    thm4_bound,
    thm4_check,
)


class PolynomialBoundTest(SimpleTestCase):
    def test_closed_form(self):
        """Test the n = 0 bound 2 T^2 (1 + T^2/3)^2 at T = 2"""
        self.assertAlmostEqual(thm1_poly_bound(2.0, 0), 392.0 / 9.0, places=12)

    def test_coefficients_reproduce_bound(self):
        """Test the expanded polynomial evaluates to the bound"""
        for n in (0, 1, 3):
            coefficients = thm1_poly_coefficients(n)
            self.assertEqual(len(coefficients), 4 * n + 7)
            for T in (0.5, 2.0, 7.0):
                self.assertAlmostEqual(P.polyval(T, coefficients) / thm1_poly_bound(T, n), 1.0, places=12)

    def test_leading_coefficient(self):
        """Test the expanded top coefficient agrees with the derived form, not the published one"""
        for n in (0, 2, 5):
            published, derived = thm1_leading_coeff(n, omega=1.3)
            top = thm1_poly_coefficients(n, omega=1.3)[-1]
            self.assertAlmostEqual(top / derived, 1.0, places=12)
            self.assertNotAlmostEqual(published / derived, 1.0, places=6)

    def test_negative_winding(self):
        """Test the winding number must be non-negative"""
        with self.assertRaises(DomainError):
            thm1_poly_bound(1.0, -1)


class SaturationBoundTest(SimpleTestCase):
    def test_values(self):
        """Test (1 - eps_max/omega)^-(n+1)"""
        self.assertEqual(thm4_bound(0.5, 0), 2.0)
        self.assertEqual(thm4_bound(0.5, 2), 8.0)

    def test_void_at_critical_point(self):
        """Test the saturation bound is undefined for eps_max >= omega"""
        with self.assertRaises(DomainError):
            thm4_bound(1.0, 0)


class BoundReportTest(SimpleTestCase):
    def test_margin_and_slack(self):
        """Test violations beyond the relative slack are flagged"""
        self.assertTrue(BoundReport("thm1", 0, 1.0, 1.0 + 1e-12).satisfied)
        self.assertFalse(BoundReport("thm1", 0, 1.0, 1.1).satisfied)
        self.assertAlmostEqual(BoundReport("thm1", 0, 3.0, 1.0).margin, 2.0)

    def test_csv(self):
        """Test the report CSV header and flags"""
        lines = reports_to_csv([BoundReport("lemma1", 2, 3.0, 1.0)]).strip().split("\n")
        self.assertEqual(lines[0], ",".join(REPORT_HEADERS))
        self.assertEqual(lines[1], "lemma1,2,3.0,1.0,2.0,true")


class TrajectoryChecksTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()
        self.config = IntegratorConfig()

    def test_critical_quench(self):
        """Test the quench sits below the n = 0 polynomial and the per-cycle bound"""
        trajectory = integrate(self.params, Constant(1.0), 5.0, self.config)
        report = thm1_check(trajectory)
        self.assertEqual(report.cycle, 0)
        self.assertTrue(report.satisfied)
        self.assertTrue(all(r.satisfied for r in lemma_cycle_check(trajectory, 1.0)))

    def test_critical_protocol(self):
        """Test a two-cycle critical protocol satisfies every bound in every cycle"""
        trajectory = integrate(self.params, from_onoff_solution(solve_fixed_n(25.0, 2, 1.0)), 25.0, self.config)
        reports = audit_trajectory(trajectory, 1.0)
        self.assertEqual({r.cycle for r in reports if r.kind == "lemma1"}, {0, 1, 2})
        self.assertTrue(all(r.satisfied for r in reports))

    def test_subcritical_protocol(self):
        """Test saturation bounds hold per winding below the critical point"""
        trajectory = integrate(self.params, from_onoff_solution(solve_fixed_n(12.0, 2, 0.7)), 12.0, self.config)
        reports = thm4_check(trajectory, 0.7)
        self.assertEqual(trajectory.winding, 2)
        self.assertEqual([r.cycle for r in reports], list(range(trajectory.winding + 1)))
        self.assertTrue(all(r.satisfied for r in reports))
        self.assertTrue(all(r.satisfied for r in lemma_cycle_check(trajectory, 0.7)))


class AuditTest(SimpleTestCase):
    def test_monotone_controls_never_wind(self):
        """Test seeded monotone controls end with winding 0"""
        reports = audit_monotone(20, seed=3, T_span=(1.0, 15.0))
        self.assertEqual(len(reports), 20)
        self.assertTrue(all(r.observed_value == 0.0 and r.satisfied for r in reports))

    def test_random_schedules(self):
        """Test a few random admissible schedules respect the bounds"""
        reports = audit_random(5, seed=1, T_span=(1.0, 6.0))
        self.assertTrue(reports)
        self.assertTrue(all(r.satisfied for r in reports))

    def test_random_subcritical_schedules(self):
        """Test random schedules capped at eps_max = 0.7 respect the saturation bound in every winding"""
        reports = audit_random(5, seed=2, T_span=(1.0, 12.0), eps_max=0.7)
        self.assertIn("thm4", {r.kind for r in reports})
        self.assertTrue(all(r.satisfied for r in reports), [r.to_dict() for r in reports if not r.satisfied])

    def test_fixed_n_subcritical(self):
        """Test optimal fixed-n protocols at eps_max = 0.7 keep non-negative saturation margins"""
        reports = audit_fixed_n([8.0, 12.0, 16.0], [1, 2], 0.7)
        self.assertTrue([r for r in reports if r.kind == "thm4"])
        self.assertTrue(all(r.margin >= 0.0 for r in reports if r.kind == "thm4"))

    def test_fixed_n_skips_infeasible(self):
        """Test infeasible protocols are skipped rather than integrated"""
        self.assertEqual(audit_fixed_n([3.0], [3], 1.0), [])

    def test_csv_audit(self):
        """Test sweep rows are checked against the polynomial bound"""
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "sweep.csv"
            path.write_text("T,winding,qfi\n1.0,0,3.0\n1.0,0,1000.0\n2.0,,\n", encoding="utf-8")
            reports = audit_csv(path)
        self.assertEqual([r.satisfied for r in reports], [True, False])

    def test_csv_audit_needs_columns(self):
        """Test a CSV without the winding column is rejected"""
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "sweep.csv"
            path.write_text("T,qfi\n1.0,3.0\n", encoding="utf-8")
            with self.assertRaises(DomainError):
                audit_csv(path)


@tag("slow")
class BoundAcceptanceTest(SimpleTestCase):
    def test_monotone_family(self):
        """Test 200 seeded monotone controls on omega T in [1, 40] never complete a winding"""
        reports = audit_monotone(200, seed=0)
        self.assertTrue(all(r.observed_value == 0.0 for r in reports))

    def test_random_family(self):
        """Test 100 seeded random schedules respect the polynomial and per-cycle bounds"""
        reports = audit_random(100, seed=0)
        violations = [r.to_dict() for r in reports if not r.satisfied]
        self.assertEqual(violations, [])
