from django.core.management.base import CommandError

from critical_metrology.utils import atomic_write_text
from dynamics.simulate import integrate, trajectory_to_csv
from dynamics.state import SystemParams
from experiments.forms import IntegratorForm, ScheduleForm
from experiments.management.base import CHECK_EXIT, MetrologyCommand
from fock_oracle.comparison import compare_with_gaussian
from open_system.covariance import OpenParams, covariance_to_csv, integrate_open, qfi_open_bound
from qfi.engine import qfi_from_trajectory

SCHEDULE_FIELDS = ['schedule', 'wT', 'n', 'eps_on', 'eps_max', 'phi_on', 'cycle_cap', 'literal', 'feedback']
INTEGRATOR_FIELDS = ['rel_tol', 'abs_tol', 'max_step', 'output_stride', 'phase_step_cap']


class Command(MetrologyCommand):
    help = 'Integrate one schedule from the vacuum and write the trajectory CSV'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument('--schedule', choices=[k for k, _ in ScheduleForm.KIND_CHOICES])
        parser.add_argument('--wT', type=float, help='Total time in units of 1/omega')
        parser.add_argument('--n', type=int, help='Number of on-off cycles')
        parser.add_argument('--eps-on', type=float)
        parser.add_argument('--eps-max', type=float)
        parser.add_argument('--phi-on', type=float)
        parser.add_argument('--cycle-cap', type=int)
        parser.add_argument('--feedback', action='store_true', help='Realize the on-off protocol by phase feedback')
        parser.add_argument('--rtol', dest='rel_tol', type=float)
        parser.add_argument('--atol', dest='abs_tol', type=float)
        parser.add_argument('--max-step', type=float)
        parser.add_argument('--stride', dest='output_stride', type=float)
        parser.add_argument('--gamma', type=float, help='Thermalization rate; switches to the covariance integrator')
        parser.add_argument('--nbar', type=float, default=0.0)
        parser.add_argument('--output', default='trajectory.csv')
        parser.add_argument('--oracle-check', action='store_true', help='Compare with the Fock-space oracle')

    def handle(self, *args, **options):
        data = self.load_config(options, SCHEDULE_FIELDS + INTEGRATOR_FIELDS)
        run = self.validated(ScheduleForm, data)
        config = self.validated(IntegratorForm, {k: data.get(k) for k in INTEGRATOR_FIELDS})['config']
        schedule, T = run['schedule_obj'], run['wT']
        params = SystemParams()

        if options['gamma'] is not None:
            states = integrate_open(params, OpenParams(options['gamma'], options['nbar']), schedule, T, config)
            atomic_write_text(options['output'], covariance_to_csv(states))
            final = states[-1]
            self.stdout.write(self.style.SUCCESS(
                f"r={final.r!r} mu={final.mu!r} Phi={final.phi!r} qfi_bound={qfi_open_bound(states, T)!r}"
            ))
            return

        trajectory = integrate(params, schedule, T, config)
        atomic_write_text(options['output'], trajectory_to_csv(trajectory))
        result = qfi_from_trajectory(trajectory)
        self.stdout.write(self.style.SUCCESS(
            f"r={result.r_final!r} Phi={float(trajectory.phi[-1])!r} n={result.winding} F={result.value!r}"
        ))

        if options['oracle_check']:
            comparison = compare_with_gaussian(params, schedule, T, config)
            for name, error in comparison.errors.items():
                self.stdout.write(f"{name} error {error:.3e}")
            if not comparison.agrees:
                raise CommandError(
                    f"Gaussian and Fock results differ by {comparison.max_error:.3e}", returncode=CHECK_EXIT
                )
            self.stdout.write(self.style.SUCCESS("Fock oracle agrees"))
