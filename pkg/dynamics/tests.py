import math

import numpy as np
from django.test import SimpleTestCase

from critical_metrology.exceptions import DomainError, InvalidStateError
from onoff.optimizer import solve_fixed_n
from schedules.laws import Constant, PiecewiseConstant, from_onoff_feedback, from_onoff_solution

from .equations import eom_rates
from .integrator import cycle_position, drive, sample_grid, wrap
from .simulate import TRAJECTORY_HEADERS, integrate, trajectory_to_csv
from .state import TWO_PI, IntegratorConfig, PhaseState, SystemParams, winding_of


class EquationsTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_vacuum_limits(self):
        """Test the vacuum is stationary without drive and its phase rate is frozen"""
        rates = eom_rates(PhaseState(0.0, 0.0, 0.0, 0.0, 0.0), 0.0, self.params)
        self.assertEqual((rates.dx, rates.dy, rates.dphi, rates.da), (0.0, 0.0, 0.0, 0.0))
        self.assertEqual(rates.dtheta, 1.0)

    def test_drive_kicks_vacuum_along_y(self):
        """Test switching on the drive pushes the vacuum along +y"""
        rates = eom_rates(PhaseState(0.0, 0.0, 0.0, 0.0, 0.0), 0.6, self.params)
        self.assertAlmostEqual(rates.dy, 0.6)
        self.assertEqual(rates.dx, 0.0)

    def test_invalid_inputs(self):
        """Test non-finite states and drives outside the symmetric phase are rejected"""
        with self.assertRaises(InvalidStateError):
            eom_rates(PhaseState(0.0, math.nan, 0.0, 0.0, 0.0), 0.5, self.params)
        with self.assertRaises(DomainError):
            eom_rates(PhaseState(0.0, 0.1, 0.0, 0.0, 0.0), 1.5, self.params)

    def test_system_params(self):
        """Test omega must be positive"""
        with self.assertRaises(DomainError):
            SystemParams(omega=0.0)


class IntegratorHelpersTest(SimpleTestCase):
    def test_wrap_and_cycle_position(self):
        """Test angle wrapping and the snap to the next winding"""
        self.assertAlmostEqual(wrap(3 * math.pi / 2), -math.pi / 2)
        self.assertEqual(cycle_position(TWO_PI - 1e-14), (1, 0.0))
        winding, rest = cycle_position(2.5 * TWO_PI)
        self.assertEqual(winding, 2)
        self.assertAlmostEqual(rest, math.pi)

    def test_sample_grid_ends_at_T(self):
        """Test the output grid always closes on T"""
        grid = sample_grid(1.03, 0.1)
        self.assertEqual(grid[0], 0.0)
        self.assertEqual(grid[-1], 1.03)
        self.assertEqual(len(grid), 12)

    def test_phase_step_cap_limit(self):
        """Test the unwrapping cap cannot exceed pi/4"""
        with self.assertRaises(DomainError):
            IntegratorConfig(phase_step_cap=1.0)


class OneSwitchPlanner:
    """Zero control with a single switch once the phase passes 0.1"""

    def __init__(self, T):
        self.T = T

    def plan(self, t, phi):
        return (lambda s: 0.0), self.T, (0.1 if t == 0.0 else None)


class DriveTest(SimpleTestCase):
    def test_sample_on_a_switch_is_kept(self):
        """Test a grid sample that coincides with a located switch is still emitted"""

        def rhs(z, eps):
            return np.array([0.0, 0.0, 1.0])

        def plane(z):
            return np.array([0.0, max(z[2] - 0.25, 0.0)])

        record = drive(rhs, [0.0, 0.0, 0.0], plane, OneSwitchPlanner(1.0), 1.0, IntegratorConfig(output_stride=0.5))
        self.assertEqual(len(record.switches), 1)
        np.testing.assert_allclose(record.times, [0.0, 0.5, 1.0], atol=1e-12)
        np.testing.assert_allclose(record.states[1], [0.0, 0.0, 0.5], atol=1e-12)


class IntegrateTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()
        self.config = IntegratorConfig()

    def test_no_drive_keeps_vacuum(self):
        """Test eps = 0 leaves the vacuum untouched"""
        trajectory = integrate(self.params, Constant(0.0), 5.0, self.config)
        self.assertEqual(float(np.max(trajectory.r)), 0.0)
        self.assertEqual(trajectory.winding, 0)
        self.assertEqual(trajectory.crossings, ())

    def test_critical_quench_is_a_free_particle(self):
        """Test eps = omega gives x = -t^2/2, y = t, cosh 2r = 1 + t^2/2"""
        trajectory = integrate(self.params, Constant(1.0), 3.0, self.config)
        final = trajectory.final
        self.assertAlmostEqual(final.x, -4.5, delta=1e-7)
        self.assertAlmostEqual(final.y, 3.0, delta=1e-7)
        self.assertAlmostEqual(math.cosh(2.0 * final.r), 5.5, delta=1e-7)
        self.assertEqual(trajectory.winding, 0)

    def test_subcritical_breathing_never_winds(self):
        """Test a constant subcritical drive breathes through the vacuum without completing a cycle"""
        trajectory = integrate(self.params, Constant(0.5), 30.0, self.config)
        self.assertEqual(trajectory.winding, 0)
        self.assertLess(float(np.max(trajectory.sinh2r)), 2.0)

    def test_free_rotation_of_injected_state(self):
        """Test an injected squeezed state rotates at 2 omega and crosses 2pi once"""
        T = 1.6 * math.pi
        trajectory = integrate(self.params, Constant(0.0), T, self.config, initial=(math.sinh(1.0), 0.0))
        self.assertEqual(trajectory.winding, 1)
        self.assertEqual(len(trajectory.crossings), 1)
        self.assertAlmostEqual(trajectory.crossings[0].t, math.pi, places=7)
        self.assertAlmostEqual(float(trajectory.phi[-1]), 2.0 * T, places=7)
        self.assertAlmostEqual(trajectory.final.r, 0.5, places=9)

    def test_onoff_protocol_windings(self):
        """Test a two-cycle protocol completes exactly two windings"""
        solution = solve_fixed_n(30.0, 2, 1.0)
        trajectory = integrate(self.params, from_onoff_solution(solution), 30.0, self.config)
        self.assertEqual(winding_of(trajectory), 2)
        self.assertEqual(len(trajectory.crossings), 2)
        for k, crossing in enumerate(trajectory.crossings, start=1):
            self.assertAlmostEqual(crossing.phi_unwrapped, k * TWO_PI, places=12)

    def test_feedback_protocol(self):
        """Test the feedback law switches on phase events and latches after two cycles"""
        rule = from_onoff_feedback(solve_fixed_n(40.0, 2, 1.0))
        trajectory = integrate(self.params, rule, 40.0, self.config)
        self.assertEqual(trajectory.winding, 2)
        self.assertEqual(len(trajectory.switches), 4)
        self.assertTrue(np.all(np.diff(trajectory.phi) >= -1e-9))

    def test_segments_are_continuous(self):
        """Test the state is continuous across a control discontinuity"""
        schedule = PiecewiseConstant(((1.0, 1.0), (1.0, 0.0)))
        coarse = integrate(self.params, schedule, 2.0, self.config.with_stride(2.0))
        fine = integrate(self.params, schedule, 2.0, self.config.with_stride(0.01))
        self.assertAlmostEqual(coarse.final.x, fine.final.x, places=9)
        self.assertAlmostEqual(coarse.final.y, fine.final.y, places=9)

    def test_trajectory_csv(self):
        """Test the trajectory CSV header and one row per sample"""
        trajectory = integrate(self.params, Constant(1.0), 1.0, self.config.with_stride(0.25))
        lines = trajectory_to_csv(trajectory).strip().split("\n")
        self.assertEqual(lines[0], ",".join(TRAJECTORY_HEADERS))
        self.assertEqual(len(lines), 6)
        self.assertEqual(lines[-1].split(",")[0], "1")

    def test_rejects_nonpositive_horizon(self):
        """Test T must be positive"""
        with self.assertRaises(DomainError):
            integrate(self.params, Constant(0.5), 0.0)
