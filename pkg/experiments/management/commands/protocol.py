from experiments.management.base import MetrologyCommand
from onoff.optimizer import (
    critical_time,
    gamma_exponent,
    n_opt_asymptotic,
    optimize_n,
    phi_star,
    r_max_asymptotic,
    solve_fixed_n,
)


class Command(MetrologyCommand):
    help = 'Print the optimal on-off protocol for a total time and the asymptotic constants'

    def add_arguments(self, parser):
        parser.add_argument('--wT', type=float, required=True)
        parser.add_argument('--n', type=int, help='Fix the number of cycles instead of optimizing it')
        parser.add_argument('--eps-max', type=float, default=1.0)
        parser.add_argument('--critical-time', type=int, metavar='N',
                            help='Also locate the time where N and N+1 cycles tie')

    def handle(self, *args, **options):
        T, eps_max = options['wT'], options['eps_max']
        if options['n'] is None:
            solution, _ = optimize_n(T, eps_max)
        else:
            solution = solve_fixed_n(T, options['n'], eps_max)
        payload = {
            'solution': solution.to_dict(),
            'phi_star': phi_star(),
            'gamma': gamma_exponent(eps_max),
            'n_opt_asymptotic': n_opt_asymptotic(T),
            'r_max_asymptotic': r_max_asymptotic(T),
        }
        if options['critical_time'] is not None:
            payload['critical_time'] = critical_time(options['critical_time'], eps_max)
        self.emit_json(payload)
        if solution.feasible:
            self.stdout.write(self.style.SUCCESS(
                f"n={solution.n} phi_n={solution.phi_n!r} tilde_phi={solution.tilde_phi_n!r} r={solution.r_pred!r}"
            ))
        else:
            self.stdout.write(self.style.WARNING(f"no feasible protocol with n={solution.n} at wT={T!r}"))
