from django.core.management.base import CommandError

from experiments.management.base import CONFIG_EXIT, MetrologyCommand
from qfi.engine import fit_exponent, fit_power_law, points_from_csv


class Command(MetrologyCommand):
    help = 'Fit a power law or an exponential to a column of a sweep CSV'

    def add_arguments(self, parser):
        parser.add_argument('csv', help='Sweep CSV with a T column')
        parser.add_argument('--window', nargs=2, type=float, required=True, metavar=('LO', 'HI'))
        parser.add_argument('--kind', choices=['power', 'exponential'], default='power')
        parser.add_argument('--column', default='qfi')
        parser.add_argument('--where', action='append', default=[], metavar='COLUMN=VALUE',
                            help='Keep only rows where COLUMN equals VALUE')

    def handle(self, *args, **options):
        filters = {}
        for clause in options['where']:
            column, sep, value = clause.partition('=')
            if not sep:
                raise CommandError(f"--where expects COLUMN=VALUE, got {clause!r}", returncode=CONFIG_EXIT)
            filters[column] = value
        points = points_from_csv(options['csv'], options['column'], filters)
        fitter = fit_power_law if options['kind'] == 'power' else fit_exponent
        self.emit_json(fitter(points, tuple(options['window'])).to_dict())
