from zeronoise.dynamics import IntermittentMap
from zeronoise.measures import write_density_csv
from zeronoise.transfer import assemble_annealed, assemble_deterministic, stationary

from ._base import LabCommand, build_system


class Command(LabCommand):
    help = 'Stationary density of T (deterministic) or of the annealed chain, as density CSV'

    def add_arguments(self, parser):
        parser.add_argument('--alpha', type=float, default=0.5, help='Map exponent (default: 0.5)')
        parser.add_argument('--eps', type=float, help='Noise level; 0 or omitted with --mode deterministic gives T')
        parser.add_argument('--noise', type=str, help='Kernel, e.g. "uniform(0.01)" or "interval(0.9, 1)"')
        parser.add_argument(
            '--mode',
            choices=['additive', 'parametric', 'deterministic'],
            default='additive',
            help='Perturbation mode (default: additive)'
        )
        parser.add_argument('--cells', type=int, default=4096, help='Number of cells N (default: 4096)')
        parser.add_argument('--quad-order', type=int, default=5, help='Gauss-Legendre nodes per cell (default: 5)')
        parser.add_argument('--tol', type=float, default=1e-10, help='Invariance residual (default: 1e-10)')
        parser.add_argument('--max-iter', type=int, default=10 ** 6, help='Power iteration cap (default: 1e6)')
        parser.add_argument('--n-starts', type=int, default=3, help='Power iteration starts (default: 3)')
        parser.add_argument('--seed', type=int, default=0, help='Seed for the random starts (default: 0)')
        parser.add_argument('--out', type=str, help='Write the CSV here instead of stdout')

    def run(self, **options):
        deterministic = options['mode'] == 'deterministic' or (
            options['eps'] == 0 and not options['noise'] and options['mode'] == 'additive'
        )
        if deterministic:
            P = assemble_deterministic(IntermittentMap(options['alpha']), options['cells'])
        else:
            system = build_system(options['mode'], options['alpha'], options['eps'], options['noise'])
            P = assemble_annealed(system, options['cells'], options['quad_order'])

        mu = stationary(
            P,
            tol=options['tol'],
            max_iter=options['max_iter'],
            n_starts=options['n_starts'],
            seed=options['seed'],
        )
        if mu.multiplicity:
            self.stderr.write(self.style.WARNING('Stationary vectors disagree across starts (multiplicity flag set)'))

        if options['out']:
            write_density_csv(mu, options['out'])
            self.stderr.write(self.style.SUCCESS(f"Wrote {options['out']} (residual {mu.residual:.3e})"))
        else:
            self.write_csv(write_density_csv, mu)
