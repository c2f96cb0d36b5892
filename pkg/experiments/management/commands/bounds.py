from django.core.management.base import CommandError

from bounds.audits import audit_csv, audit_fixed_n, audit_monotone, audit_random
from experiments.forms import IntegratorForm
from experiments.management.base import CHECK_EXIT, CONFIG_EXIT, MetrologyCommand


class Command(MetrologyCommand):
    help = 'Audit the analytic bounds on a sweep CSV or on seeded random runs'

    def add_arguments(self, parser):
        parser.add_argument('--input', help='Closed-system sweep CSV to audit row by row')
        parser.add_argument('--random', type=int, default=0, help='Number of random admissible schedules')
        parser.add_argument('--monotone', type=int, default=0, help='Number of random monotone schedules')
        parser.add_argument('--fixed-n', nargs='+', type=int, help='Winding numbers of on-off runs to audit')
        parser.add_argument('--T', nargs='+', type=float, help='Time grid of the on-off runs')
        parser.add_argument('--eps-max', type=float, default=1.0)
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--stride', dest='output_stride', type=float)
        parser.add_argument('--report', help='Write the JSON report here instead of stdout')

    def handle(self, *args, **options):
        eps_max = options['eps_max']
        config = self.validated(IntegratorForm, {'output_stride': options['output_stride']})['config']
        reports = []
        if options['input']:
            reports.extend(audit_csv(options['input']))
        if options['random']:
            reports.extend(audit_random(options['random'], options['seed'], eps_max=eps_max, config=config))
        if options['monotone']:
            reports.extend(audit_monotone(options['monotone'], options['seed'], eps_max=eps_max, config=config))
        if options['fixed_n']:
            if not options['T']:
                raise CommandError("--fixed-n needs a --T grid", returncode=CONFIG_EXIT)
            reports.extend(audit_fixed_n(options['T'], options['fixed_n'], eps_max, config=config))
        if not reports:
            raise CommandError("nothing to audit", returncode=CONFIG_EXIT)

        violations = [r for r in reports if not r.satisfied]
        self.emit_json(
            {
                'checked': len(reports),
                'violations': len(violations),
                'reports': [r.to_dict() for r in reports],
            },
            options['report'],
        )
        kinds = sorted({r.kind for r in reports})
        if violations:
            worst = min(violations, key=lambda r: r.margin)
            raise CommandError(
                f"{len(violations)} of {len(reports)} bound checks violated; worst {worst.kind} "
                f"cycle {worst.cycle} margin {worst.margin!r}",
                returncode=CHECK_EXIT,
            )
        self.stdout.write(self.style.SUCCESS(f"All {len(reports)} bound checks satisfied ({', '.join(kinds)})"))
