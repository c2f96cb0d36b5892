import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag

from onoff.optimizer import gamma_exponent
from qfi.engine import fit_exponent, fit_power_law, points_from_csv

from .forms import IntegratorForm, ScheduleForm, SweepSpecForm
from .models import SweepPoint, SweepRun
from .sweeps import CLOSED_HEADERS, point_key, run_sweep


def sweep_spec(**data):
    form = SweepSpecForm(data)
    assert form.is_valid(), form.errors
    return form.cleaned_data['spec']


class ScheduleFormTest(SimpleTestCase):
    def test_quench(self):
        """Test a quench defaults to the critical drive"""
        form = ScheduleForm({'schedule': 'quench', 'wT': 3.0})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['schedule_obj'].eval(1.0), 1.0)

    def test_drive_outside_symmetric_phase(self):
        """Test eps_on above omega is rejected with the symmetric-phase message"""
        form = ScheduleForm({'schedule': 'quench', 'wT': 3.0, 'eps_on': 1.2})
        self.assertFalse(form.is_valid())
        self.assertIn('symmetric phase', form.non_field_errors()[0])

    def test_onoff_protocol(self):
        """Test the on-off kind solves the protocol for n cycles"""
        form = ScheduleForm({'schedule': 'onoff', 'wT': 40.0, 'n': 2})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(len(form.cleaned_data['schedule_obj'].pieces), 5)

    def test_onoff_needs_room(self):
        """Test too many cycles for the time budget is a validation error"""
        form = ScheduleForm({'schedule': 'onoff', 'wT': 3.0, 'n': 4})
        self.assertFalse(form.is_valid())

    def test_feedback_needs_angle(self):
        """Test the feedback law requires its switching angle"""
        form = ScheduleForm({'schedule': 'onoff_feedback', 'wT': 10.0})
        self.assertFalse(form.is_valid())

    def test_literal(self):
        """Test JSON literals are decoded into schedules"""
        form = ScheduleForm({'schedule': 'literal', 'wT': 2.0, 'literal': {'kind': 'constant', 'eps': 0.5}})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['schedule_obj'].eval(1.0), 0.5)


class IntegratorFormTest(SimpleTestCase):
    def test_defaults_from_settings(self):
        """Test missing tolerances come from the settings"""
        form = IntegratorForm({'output_stride': 0.5})
        self.assertTrue(form.is_valid())
        self.assertEqual(form.cleaned_data['config'].output_stride, 0.5)
        self.assertEqual(form.cleaned_data['config'].rel_tol, 1e-10)

    def test_phase_cap(self):
        """Test a phase step cap above pi/4 is rejected"""
        self.assertFalse(IntegratorForm({'phase_step_cap': 1.0}).is_valid())


class SweepSpecFormTest(SimpleTestCase):
    def test_log_range(self):
        """Test a log-spaced range keeps its endpoints"""
        spec = sweep_spec(mode='optimal_n', T_range=[1.0, 100.0, 3], log=True)
        self.assertEqual(len(spec.T), 3)
        self.assertAlmostEqual(spec.T[1], 10.0)
        self.assertEqual(spec.T[-1], 100.0)

    def test_bad_grids(self):
        """Test empty, non-positive and unsorted grids are rejected"""
        for data in (
            {'mode': 'fixed_n'},
            {'mode': 'fixed_n', 'T': []},
            {'mode': 'fixed_n', 'T': [0.0, 1.0]},
            {'mode': 'fixed_n', 'T': [3.0, 2.0]},
            {'mode': 'fixed_n', 'T': [1.0], 'T_range': [1.0, 2.0, 2]},
        ):
            self.assertFalse(SweepSpecForm(data).is_valid(), data)

    def test_digest_is_stable(self):
        """Test equal specifications hash equally and different ones do not"""
        first = sweep_spec(mode='fixed_n', T=[5.0, 6.0], n=[2, 1])
        second = sweep_spec(mode='fixed_n', T=[5.0, 6.0], n=[1, 2])
        third = sweep_spec(mode='fixed_n', T=[5.0, 6.0], n=[1])
        self.assertEqual(first.digest(), second.digest())
        self.assertNotEqual(first.digest(), third.digest())
        self.assertEqual(len(first.points()), 4)


class SweepJournalTest(TestCase):
    def setUp(self):
        self.spec = sweep_spec(mode='fixed_n', T=[6.0, 8.0], n=[1])

    def test_run_and_resume(self):
        """Test a rerun computes nothing and reproduces the CSV byte for byte"""
        first = run_sweep(self.spec, workers=1)
        self.assertEqual(first.computed, 2)
        self.assertEqual(first.failed, 0)
        lines = first.csv.strip().split("\n")
        self.assertEqual(lines[0], ",".join(CLOSED_HEADERS))
        self.assertEqual(len(lines), 3)

        again = run_sweep(self.spec, workers=1)
        self.assertEqual(again.computed, 0)
        self.assertEqual(again.csv, first.csv)
        self.assertEqual(SweepRun.objects.count(), 1)

    def test_interrupted_sweep(self):
        """Test a sweep missing journal entries completes to the same CSV"""
        complete = run_sweep(self.spec, workers=1)
        SweepPoint.objects.filter(point_key=point_key({'n': 1, 'T': 8.0})).delete()
        resumed = run_sweep(self.spec, workers=1)
        self.assertEqual(resumed.computed, 1)
        self.assertEqual(resumed.csv, complete.csv)

    def test_failed_points_are_retried(self):
        """Test infeasible points are journaled as failed, left blank and retried"""
        spec = sweep_spec(mode='fixed_n', T=[2.0], n=[3])
        outcome = run_sweep(spec, workers=1)
        self.assertEqual(outcome.failed, 1)
        self.assertEqual(outcome.csv.strip().split("\n")[1], "2.0,3,1.0,,,,")
        point = SweepPoint.objects.get()
        self.assertEqual(point.status, SweepPoint.Status.FAILED)
        self.assertIn('CriticalMetrologyError', point.error)
        self.assertEqual(run_sweep(spec, workers=1).computed, 1)

    def test_parallel_workers_match_serial(self):
        """Test a pool of worker processes produces the same CSV as a serial run"""
        spec = sweep_spec(mode='fixed_n', T=[6.0, 7.0, 8.0], n=[0, 1])
        parallel = run_sweep(spec, workers=2)
        self.assertEqual(parallel.computed, 6)
        self.assertEqual(parallel.failed, 0)
        SweepRun.objects.all().delete()
        serial = run_sweep(spec, workers=1)
        self.assertEqual(parallel.csv, serial.csv)

    def test_output_file(self):
        """Test the CSV is written to the requested path"""
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'nested' / 'sweep.csv'
            outcome = run_sweep(self.spec, output=path, workers=1)
            self.assertEqual(path.read_text(encoding='utf-8'), outcome.csv)


class CommandTest(TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def test_simulate(self):
        """Test simulate writes the trajectory and prints the summary"""
        out = StringIO()
        output = self.path / 'trajectory.csv'
        call_command('simulate', '--schedule', 'quench', '--wT', '3', '--output', str(output), stdout=out)
        self.assertIn('r=', out.getvalue())
        self.assertTrue(output.read_text(encoding='utf-8').startswith('t,x,y,theta,phi,r'))

    def test_simulate_open(self):
        """Test a thermalization rate switches to the covariance CSV"""
        out = StringIO()
        output = self.path / 'covariance.csv'
        call_command('simulate', '--schedule', 'quench', '--wT', '2', '--gamma', '0.1', '--output', str(output),
                     stdout=out)
        self.assertIn('qfi_bound=', out.getvalue())
        self.assertTrue(output.read_text(encoding='utf-8').startswith('t,vxx,vpp,vxp,mu'))

    def test_simulate_config_document(self):
        """Test flags override the JSON config document"""
        config = self.path / 'run.json'
        config.write_text(json.dumps({'schedule': 'quench', 'wT': 1.0, 'eps_on': 0.5}), encoding='utf-8')
        output = self.path / 'trajectory.csv'
        call_command('simulate', '--config', str(config), '--wT', '2', '--output', str(output), stdout=StringIO())
        last = output.read_text(encoding='utf-8').strip().split("\n")[-1]
        self.assertEqual(last.split(',')[0], '2')

    def test_simulate_rejects_supercritical_drive(self):
        """Test eps_on beyond omega exits with status 2"""
        with self.assertRaises(CommandError) as raised:
            call_command('simulate', '--schedule', 'quench', '--wT', '3', '--eps-on', '1.2',
                         '--output', str(self.path / 'x.csv'), stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 2)
        self.assertIn('symmetric phase', str(raised.exception))

    def test_protocol(self):
        """Test protocol prints the solution and the asymptotic constants"""
        out = StringIO()
        call_command('protocol', '--wT', '30', stdout=out)
        payload = json.loads(out.getvalue().splitlines()[0])
        self.assertAlmostEqual(payload['phi_star'], 2.664, delta=0.005)
        self.assertTrue(payload['solution']['feasible'])
        self.assertIn('n=', out.getvalue().splitlines()[1])

    def test_fit(self):
        """Test fit reports the exact slope of synthetic power-law data"""
        csv = self.path / 'power.csv'
        csv.write_text("T,qfi\n" + "".join(f"{T}.0,{T ** 7}.0\n" for T in range(1, 11)), encoding='utf-8')
        out = StringIO()
        call_command('fit', str(csv), '--window', '1', '10', stdout=out)
        self.assertAlmostEqual(json.loads(out.getvalue())['slope'], 7.0, places=9)

    def test_fit_empty_window(self):
        """Test an empty fit window exits with status 2"""
        csv = self.path / 'power.csv'
        csv.write_text("T,qfi\n1.0,1.0\n2.0,4.0\n", encoding='utf-8')
        with self.assertRaises(CommandError) as raised:
            call_command('fit', str(csv), '--window', '5', '9', stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 2)

    def test_bounds(self):
        """Test seeded monotone runs pass the bound audit"""
        out = StringIO()
        call_command('bounds', '--monotone', '3', '--stride', '0.5', stdout=out)
        payload = json.loads(out.getvalue().splitlines()[0])
        self.assertEqual(payload['checked'], 3)
        self.assertEqual(payload['violations'], 0)

    def test_bounds_violation(self):
        """Test a violating sweep row exits with status 5"""
        csv = self.path / 'sweep.csv'
        csv.write_text("T,winding,qfi\n1.0,0,1000.0\n", encoding='utf-8')
        with self.assertRaises(CommandError) as raised:
            call_command('bounds', '--input', str(csv), stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 5)

    def test_bounds_without_input(self):
        """Test an audit with nothing to check exits with status 2"""
        with self.assertRaises(CommandError) as raised:
            call_command('bounds', stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 2)

    def test_missing_csv(self):
        """Test an unreadable input exits with status 4"""
        with self.assertRaises(CommandError) as raised:
            call_command('bounds', '--input', str(self.path / 'missing.csv'), stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 4)

    def test_oracle_check(self):
        """Test the quench agrees with the Fock oracle"""
        report = self.path / 'oracle.json'
        out = StringIO()
        call_command('oracle_check', '--quench', '2', '--dim', '96', '--report', str(report), stdout=out)
        payload = json.loads(report.read_text(encoding='utf-8'))
        self.assertTrue(payload[0]['agrees'])
        self.assertIn('agree', out.getvalue())

    def test_sweep(self):
        """Test the sweep command writes the CSV and resumes"""
        output = self.path / 'sweep.csv'
        arguments = ['sweep', '--mode', 'fixed_n', '--T', '6', '8', '--n', '1', '--output', str(output)]
        call_command(*arguments, stdout=StringIO())
        first = output.read_text(encoding='utf-8')
        out = StringIO()
        call_command(*arguments, stdout=out)
        self.assertIn('(0 computed)', out.getvalue())
        self.assertEqual(output.read_text(encoding='utf-8'), first)


@tag('slow')
class ScalingAcceptanceTest(TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def sweep(self, **data):
        output = self.path / 'sweep.csv'
        run_sweep(sweep_spec(**data), output=output, workers=1)
        return output

    def test_polynomial_scaling_at_fixed_winding(self):
        """Test F grows like T^(4n+6) at fixed winding number"""
        output = self.sweep(mode='fixed_n', n=[0, 1, 2], T_range=[100.0, 1000.0, 12], log=True)
        for n, target, tolerance in ((0, 6.0, 0.3), (1, 10.0, 0.4), (2, 14.0, 0.5)):
            fit = fit_power_law(points_from_csv(output, 'qfi', {'n': n}), (100.0, 1000.0))
            self.assertAlmostEqual(fit.slope, target, delta=tolerance)

    def test_exponential_scaling_at_optimal_winding(self):
        """Test ln F grows at the rate Gamma with the winding number optimized"""
        output = self.sweep(mode='optimal_n', T_range=[30.0, 70.0, 21])
        fit = fit_exponent(points_from_csv(output), (30.0, 70.0))
        self.assertAlmostEqual(fit.slope / gamma_exponent(1.0), 1.0, delta=0.05)

    def test_subcritical_exponent(self):
        """Test the eps_max = 0.7 omega sweep grows at Gamma(0.7)"""
        output = self.sweep(mode='optimal_n', eps_max=0.7, T_range=[30.0, 70.0, 21])
        fit = fit_exponent(points_from_csv(output), (30.0, 70.0))
        self.assertAlmostEqual(fit.slope / gamma_exponent(0.7), 1.0, delta=0.07)

    def test_nearly_closed_system(self):
        """Test a vanishing thermalization rate keeps the closed-system exponent while omega T < ln(1/gamma)"""
        output = self.sweep(mode='open', gamma=[0.0, 1e-6], T_range=[6.0, 12.0, 13])
        lossless = fit_exponent(points_from_csv(output, 'qfi_bound', {'gamma': 0.0}), (6.0, 12.0))
        weak = fit_exponent(points_from_csv(output, 'qfi_bound', {'gamma': 1e-6}), (6.0, 12.0))
        self.assertAlmostEqual(weak.slope / lossless.slope, 1.0, delta=0.02)
        output = self.sweep(mode='open', gamma=[0.0], T_range=[30.0, 70.0, 11])
        closed = fit_exponent(points_from_csv(output, 'qfi_bound'), (30.0, 70.0))
        self.assertAlmostEqual(closed.slope / gamma_exponent(1.0), 1.0, delta=0.1)

    def test_dissipative_exponents(self):
        """Test the bound grows at Gamma/2 - gamma when that is positive and saturates otherwise"""
        output = self.sweep(mode='open', gamma=[0.2, 0.6], T_range=[30.0, 70.0, 11])
        weak = fit_exponent(points_from_csv(output, 'qfi_bound', {'gamma': 0.2}), (30.0, 70.0))
        self.assertAlmostEqual(weak.slope / (gamma_exponent(1.0) / 2 - 0.2), 1.0, delta=0.1)
        strong = fit_exponent(points_from_csv(output, 'qfi_bound', {'gamma': 0.6}), (30.0, 70.0))
        self.assertLess(strong.slope, 0.1)
