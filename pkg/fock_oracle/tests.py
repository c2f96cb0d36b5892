import math

import numpy as np
from django.test import SimpleTestCase, override_settings, tag

from critical_metrology.exceptions import DomainError, ScheduleError, TruncationError
from dynamics.simulate import integrate
from dynamics.state import IntegratorConfig, SystemParams
from onoff.optimizer import solve_fixed_n
from qfi.engine import qfi_from_trajectory
from schedules.laws import Constant, LinearRamp, PhaseFeedbackOnOff, from_onoff_solution
from schedules.sampling import random_admissible

from .comparison import compare_with_gaussian
from .evolution import evolve, hamiltonian_matrix, lowest_even_gap, qfi_fd, qfi_generator, with_truncation_growth
from .states import FockVector, moments, phase_state_of, squeezed_vacuum


class HamiltonianTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_entries(self):
        """Test the diagonal and two-photon couplings of H"""
        H = hamiltonian_matrix(0.4, self.params, 8).toarray()
        self.assertAlmostEqual(H[0, 0], -0.1)
        self.assertAlmostEqual(H[3, 3], 3.0 - 0.7)
        self.assertAlmostEqual(H[2, 0], -0.1 * math.sqrt(2.0))
        self.assertEqual(H[1, 0], 0.0)
        np.testing.assert_array_equal(H, H.T)

    def test_minimum_dimension(self):
        """Test truncations below four levels are refused"""
        with self.assertRaises(DomainError):
            hamiltonian_matrix(0.4, self.params, 3)

    def test_gap_closes_at_the_critical_point(self):
        """Test the lowest even gap 2 omega sqrt(1 - eps/omega)"""
        self.assertAlmostEqual(lowest_even_gap(0.75, self.params, 200), 1.0, places=8)
        self.assertAlmostEqual(lowest_even_gap(0.0, self.params, 40), 2.0, places=12)


class StatesTest(SimpleTestCase):
    def test_squeezed_vacuum_moments(self):
        """Test <n> = sinh^2 r and the phase read back from <a^2>"""
        psi = squeezed_vacuum(0.6, 1.2, 96)
        self.assertAlmostEqual(psi.norm, 1.0, places=12)
        _, number = moments(psi)
        self.assertAlmostEqual(number, math.sinh(0.6) ** 2, places=10)
        r, phi = phase_state_of(psi)
        self.assertAlmostEqual(r, 0.6, places=10)
        self.assertAlmostEqual(phi, 1.2, places=10)
        self.assertEqual(psi.odd_mass, 0.0)

    def test_truncation_detected(self):
        """Test a strongly squeezed state overflows a small basis"""
        with self.assertRaises(TruncationError):
            squeezed_vacuum(3.0, 0.0, 32)

    def test_vacuum(self):
        """Test the vacuum has no excitations"""
        self.assertEqual(moments(FockVector.vacuum(8)), (0j, 0.0))


class EvolutionTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_free_rotation_phases(self):
        """Test eps = 0 multiplies each level by exp(-i n omega T)"""
        psi0 = squeezed_vacuum(0.3, 0.5, 64)
        psi = evolve(psi0, Constant(0.0), 1.3, self.params)
        expected = psi0.amplitudes * np.exp(-1j * np.arange(64) * 1.3)
        np.testing.assert_allclose(psi.amplitudes, expected, atol=1e-12)

    def test_critical_quench(self):
        """Test <n> = 2.25, the plane point (-4.5, 3) and even parity after the quench to T = 3"""
        psi = evolve(FockVector.vacuum(128), Constant(1.0), 3.0, self.params)
        _, number = moments(psi)
        self.assertAlmostEqual(number, 2.25, places=8)
        r, phi = phase_state_of(psi)
        self.assertAlmostEqual(math.sinh(2.0 * r) * math.cos(phi), -4.5, places=7)
        self.assertAlmostEqual(math.sinh(2.0 * r) * math.sin(phi), 3.0, places=7)
        self.assertEqual(psi.odd_mass, 0.0)

    def test_ramp_slices(self):
        """Test a ramp is propagated slice by slice and stays normalized"""
        psi = evolve(FockVector.vacuum(64), LinearRamp(0.0, 1.0, 1.0), 1.0, self.params, dt=1e-2)
        self.assertAlmostEqual(psi.norm, 1.0, places=10)
        self.assertGreater(moments(psi)[1], 0.0)

    def test_feedback_schedules_are_refused(self):
        """Test phase-feedback laws cannot be replayed in the number basis"""
        with self.assertRaises(ScheduleError):
            evolve(FockVector.vacuum(16), PhaseFeedbackOnOff(phi_on=2.0, eps_on=1.0), 1.0, self.params)

    @override_settings(CRITMET_FOCK_DIM_MAX=65)
    def test_truncation_growth(self):
        """Test the basis grows 17 -> 33 -> 65 until the run fits"""
        tried = []

        def run(dim):
            tried.append(dim)
            if dim < 65:
                raise TruncationError(f"too small at {dim}")
            return dim

        self.assertEqual(with_truncation_growth(run, 17), 65)
        self.assertEqual(tried, [17, 33, 65])

    @override_settings(CRITMET_FOCK_DIM_MAX=33)
    def test_truncation_growth_limit(self):
        """Test the error escapes once the cap is reached"""

        def run(dim):
            raise TruncationError(f"too small at {dim}")

        with self.assertRaises(TruncationError):
            with_truncation_growth(run, 17)


class FockQfiTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_undriven_vacuum(self):
        """Test the vacuum carries no information about omega"""
        self.assertEqual(qfi_fd(Constant(0.0), 2.0, self.params, dim=16), 0.0)

    def test_weak_drive_is_not_mistaken_for_round_off(self):
        """Test a small but genuine QFI survives the round-off floor"""
        gaussian = qfi_from_trajectory(integrate(self.params, Constant(0.01), 1.0, IntegratorConfig())).value
        fd = qfi_fd(Constant(0.01), 1.0, self.params, dim=16)
        self.assertGreater(fd, 0.0)
        self.assertAlmostEqual(fd / gaussian, 1.0, delta=1e-3)

    def test_free_rotation_of_squeezed_vacuum(self):
        """Test F = 2 sinh^2 2r T^2 for a freely rotating squeezed vacuum"""
        def prepare(size):
            return squeezed_vacuum(0.5, 0.0, size)

        value = qfi_generator(Constant(0.0), 2.0, self.params, dim=96, prepare=prepare)
        self.assertAlmostEqual(value / (8.0 * math.sinh(1.0) ** 2), 1.0, places=9)

    def test_quench_matches_gaussian(self):
        """Test the number-basis QFI of the critical quench matches 2 |J|^2"""
        gaussian = qfi_from_trajectory(integrate(self.params, Constant(1.0), 3.0, IntegratorConfig())).value
        fd = qfi_fd(Constant(1.0), 3.0, self.params, dim=128)
        generator = qfi_generator(Constant(1.0), 3.0, self.params, dim=128)
        self.assertAlmostEqual(fd / gaussian, 1.0, delta=1e-3)
        self.assertAlmostEqual(generator / fd, 1.0, delta=1e-5)


class ComparisonTest(SimpleTestCase):
    def setUp(self):
        self.params = SystemParams()

    def test_onoff_protocol_agrees(self):
        """Test the Gaussian integrator and the oracle agree on a one-cycle protocol"""
        schedule = from_onoff_solution(solve_fixed_n(6.0, 1, 1.0))
        comparison = compare_with_gaussian(self.params, schedule, 6.0, dim=257)
        self.assertTrue(comparison.agrees, comparison.errors)
        self.assertEqual(set(comparison.to_dict()["errors"]), {"r", "plane", "number", "qfi"})

    def test_random_schedule_agrees(self):
        """Test agreement on a seeded random admissible schedule"""
        schedule = random_admissible(np.random.default_rng(11), 3.0)
        comparison = compare_with_gaussian(self.params, schedule, 3.0, dim=129)
        self.assertLess(comparison.max_error, 1e-3, comparison.errors)


@tag("slow")
class OracleAcceptanceTest(SimpleTestCase):
    def test_twenty_random_schedules(self):
        """Test agreement to 1e-3 on 20 seeded schedules with omega T <= 5"""
        params = SystemParams()
        for seed in range(20):
            rng = np.random.default_rng(seed)
            T = float(rng.uniform(0.5, 5.0))
            comparison = compare_with_gaussian(params, random_admissible(rng, T), T)
            self.assertTrue(comparison.agrees, (seed, comparison.errors))
