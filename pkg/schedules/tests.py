import math

import numpy as np
from django.test import SimpleTestCase

from critical_metrology.exceptions import DomainError, ScheduleError
from onoff.optimizer import solve_fixed_n

from .laws import (
    Constant,
    LinearRamp,
    PhaseFeedbackOnOff,
    PiecewiseConstant,
    from_onoff_feedback,
    from_onoff_solution,
    is_monotone,
    schedule_from_dict,
)
from .sampling import random_admissible, random_monotone


class ScheduleEvalTest(SimpleTestCase):
    def test_piecewise_eval_uses_right_continuous_edges(self):
        """Test piecewise schedules switch exactly at their boundaries"""
        schedule = PiecewiseConstant(((1.0, 0.2), (2.0, 0.5)))
        self.assertEqual(schedule.eval(0.5), 0.2)
        self.assertEqual(schedule.eval(1.0), 0.5)
        self.assertEqual(schedule.eval(2.9), 0.5)
        self.assertEqual(schedule.eps_max, 0.5)
        self.assertAlmostEqual(schedule.horizon, 3.0)

    def test_piecewise_segments_cover_horizon(self):
        """Test segments are cut at T and refuse horizons past the program"""
        schedule = PiecewiseConstant(((1.0, 0.2), (2.0, 0.5)))
        segments = schedule.segments(2.0)
        self.assertEqual([(a, b) for a, b, _ in segments], [(0.0, 1.0), (1.0, 2.0)])
        self.assertEqual(segments[1][2](1.5), 0.5)
        with self.assertRaises(ScheduleError):
            schedule.segments(4.0)

    def test_eval_outside_horizon(self):
        """Test evaluating past the programmed duration is a domain error"""
        with self.assertRaises(DomainError):
            LinearRamp(0.0, 1.0, 2.0).eval(3.0)

    def test_ramp_midpoint(self):
        """Test linear ramps interpolate"""
        self.assertAlmostEqual(LinearRamp(0.2, 0.8, 4.0).eval(1.0), 0.35)

    def test_symmetric_phase_validation(self):
        """Test a control above omega names the symmetric-phase constraint"""
        with self.assertRaisesMessage(ScheduleError, "symmetric phase"):
            Constant(1.2).validate(1.0)
        with self.assertRaisesMessage(ScheduleError, "symmetric phase"):
            PiecewiseConstant(((1.0, -0.1),), eps_max=1.0).validate(1.0)


class FeedbackLawTest(SimpleTestCase):
    def test_feedback_switching(self):
        """Test the on-off rule follows the phase and latches after the cap"""
        rule = PhaseFeedbackOnOff(phi_on=2.0, eps_on=1.0, cycle_cap=2)
        self.assertEqual(rule.eval(0.0, phi_mod=1.0, winding=0), 1.0)
        self.assertEqual(rule.eval(0.0, phi_mod=3.0, winding=1), 0.0)
        self.assertEqual(rule.eval(0.0, phi_mod=3.0, winding=2), 1.0)

    def test_feedback_rejects_unwrapped_phase(self):
        """Test phi_mod must lie in [0, 2pi)"""
        rule = PhaseFeedbackOnOff(phi_on=2.0, eps_on=1.0)
        with self.assertRaises(DomainError):
            rule.eval(0.0, phi_mod=7.0)

    def test_feedback_angle_range(self):
        """Test the switching angle must lie strictly inside the turn"""
        with self.assertRaises(ScheduleError):
            PhaseFeedbackOnOff(phi_on=0.0, eps_on=1.0)


class MonotoneTest(SimpleTestCase):
    def test_is_monotone(self):
        """Test monotonicity detection on each kind of law"""
        self.assertTrue(is_monotone(LinearRamp(0.1, 0.9, 5.0)))
        self.assertTrue(is_monotone(Constant(0.4)))
        self.assertFalse(is_monotone(PiecewiseConstant(((1.0, 0.8), (1.0, 0.3)))))
        self.assertFalse(is_monotone(PhaseFeedbackOnOff(phi_on=2.0, eps_on=1.0)))

    def test_random_monotone_family(self):
        """Test seeded monotone samples are non-decreasing and admissible"""
        for seed in range(30):
            schedule = random_monotone(np.random.default_rng(seed), 10.0, eps_max=0.9)
            self.assertTrue(is_monotone(schedule))
            schedule.validate(1.0)
            self.assertGreaterEqual(schedule.horizon, 10.0 * (1.0 - 1e-12))

    def test_random_admissible_levels(self):
        """Test random schedules stay inside [0, eps_max] and span T"""
        schedule = random_admissible(np.random.default_rng(7), 5.0, eps_max=0.8)
        self.assertTrue(all(0.0 <= e <= 0.8 for e in schedule.levels()))
        self.assertAlmostEqual(schedule.horizon, 5.0, places=10)


class OnOffRealizationTest(SimpleTestCase):
    def setUp(self):
        self.solution = solve_fixed_n(40.0, 2, 1.0)

    def test_programmed_realization(self):
        """Test a solved protocol becomes n (on, off) pairs plus the final on-segment"""
        schedule = from_onoff_solution(self.solution)
        self.assertEqual(len(schedule.pieces), 5)
        self.assertEqual([e for _, e in schedule.pieces], [1.0, 0.0, 1.0, 0.0, 1.0])
        self.assertAlmostEqual(schedule.horizon, 40.0, places=8)

    def test_feedback_realization(self):
        """Test the feedback realization switches at phi_n and latches after n cycles"""
        rule = from_onoff_feedback(self.solution)
        self.assertEqual(rule.cycle_cap, 2)
        self.assertEqual(rule.phi_on, self.solution.phi_n)

    def test_infeasible_solution(self):
        """Test infeasible protocols cannot be realized"""
        with self.assertRaises(ScheduleError):
            from_onoff_solution(solve_fixed_n(3.0, 4, 1.0))


class ScheduleCodecTest(SimpleTestCase):
    def test_literals(self):
        """Test every kind is rebuilt from its JSON literal"""
        for schedule in (
            Constant(0.5),
            PiecewiseConstant(((1.5, 0.3), (2.0, 1.0))),
            LinearRamp(0.0, 0.7, 3.0),
            PhaseFeedbackOnOff(phi_on=math.pi / 2, eps_on=0.9, cycle_cap=3),
        ):
            self.assertEqual(schedule_from_dict(schedule.to_dict()), schedule)

    def test_schedule_id_is_stable(self):
        """Test equal laws share an identifier"""
        self.assertEqual(Constant(0.5).schedule_id, Constant(0.5, eps_max=0.5).schedule_id)

    def test_bad_literals(self):
        """Test unknown kinds and missing keys raise ScheduleError"""
        with self.assertRaises(ScheduleError):
            schedule_from_dict({"kind": "sine"})
        with self.assertRaises(ScheduleError):
            schedule_from_dict({"kind": "ramp", "eps_start": 0.0})
        with self.assertRaises(ScheduleError):
            schedule_from_dict([1, 2])
