from experiments.forms import SweepSpecForm
from experiments.management.base import MetrologyCommand
from experiments.sweeps import run_sweep

SPEC_FIELDS = ['mode', 'T', 'T_range', 'log', 'n', 'eps_max', 'gamma', 'nbar', 'samples', 'seed', 'integrator']


class Command(MetrologyCommand):
    help = 'Run a resumable parameter sweep and write one CSV row per grid point'

    def add_arguments(self, parser):
        self.add_config_argument(parser)
        parser.add_argument('--mode', choices=['fixed_n', 'optimal_n', 'open', 'monotone_family'])
        parser.add_argument('--T', nargs='+', type=float, help='Explicit omega*T grid')
        parser.add_argument('--T-range', nargs=3, type=float, metavar=('START', 'STOP', 'COUNT'))
        parser.add_argument('--log', action='store_true', help='Log-space the --T-range grid')
        parser.add_argument('--n', nargs='+', type=int)
        parser.add_argument('--eps-max', type=float)
        parser.add_argument('--gamma', nargs='+', type=float)
        parser.add_argument('--nbar', type=float)
        parser.add_argument('--samples', type=int, help='Random schedules per T in the monotone family')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--workers', type=int, help='Worker processes (default CRITMET_WORKERS)')
        parser.add_argument('--output', default='sweep.csv')

    def handle(self, *args, **options):
        data = self.load_config(options, SPEC_FIELDS)
        spec = self.validated(SweepSpecForm, data)['spec']
        outcome = run_sweep(spec, output=options['output'], workers=options['workers'] or data.get('workers'))
        points = len(spec.points())
        if outcome.failed:
            self.stdout.write(self.style.WARNING(f"{outcome.failed} of {points} points failed"))
        self.stdout.write(self.style.SUCCESS(
            f"{spec.mode} sweep: {points} points ({outcome.computed} computed) -> {options['output']}"
        ))
