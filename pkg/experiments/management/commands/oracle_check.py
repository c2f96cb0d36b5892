import numpy as np
from django.core.management.base import CommandError

from dynamics.state import SystemParams
from experiments.forms import IntegratorForm
from experiments.management.base import CHECK_EXIT, MetrologyCommand
from fock_oracle.comparison import compare_with_gaussian
from schedules.laws import Constant
from schedules.sampling import random_admissible


class Command(MetrologyCommand):
    help = 'Compare the Gaussian integrator with the Fock-space oracle'

    def add_arguments(self, parser):
        parser.add_argument('--random', type=int, default=0, help='Number of seeded random schedules')
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--max-wT', type=float, default=4.0)
        parser.add_argument('--quench', type=float, metavar='wT', help='Critical quench of this duration')
        parser.add_argument('--dim', type=int, help='Initial Fock truncation (default CRITMET_FOCK_DIM)')
        parser.add_argument('--report', help='Write the JSON report here instead of stdout')

    def handle(self, *args, **options):
        config = self.validated(IntegratorForm, {})['config']
        params = SystemParams()
        cases = []
        if options['quench']:
            cases.append((Constant(1.0), options['quench']))
        for index in range(options['random']):
            rng = np.random.default_rng([options['seed'], index])
            T = float(rng.uniform(1.0, options['max_wT']))
            cases.append((random_admissible(rng, T), T))
        if not cases:
            cases.append((Constant(1.0), 3.0))

        comparisons = [compare_with_gaussian(params, s, T, config, options['dim']) for s, T in cases]
        self.emit_json(
            [{'schedule': s.to_dict(), 'T': T, **c.to_dict()} for (s, T), c in zip(cases, comparisons)],
            options['report'],
        )
        worst = max(c.max_error for c in comparisons)
        if not all(c.agrees for c in comparisons):
            raise CommandError(f"oracle disagreement up to {worst:.3e}", returncode=CHECK_EXIT)
        self.stdout.write(self.style.SUCCESS(f"{len(comparisons)} oracle comparisons agree (worst {worst:.3e})"))
