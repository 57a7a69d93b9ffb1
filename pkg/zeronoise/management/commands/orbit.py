import csv
import io

from zeronoise.sampling import random_orbit
from zeronoise.utils import format_float

from ._base import LabCommand, build_system

ORBIT_COLUMNS = ('step', 'state', 'draw', 'log_deriv')


class Command(LabCommand):
    help = 'Seeded random orbit as CSV (step,state,draw,log_deriv)'

    def add_arguments(self, parser):
        parser.add_argument('--alpha', type=float, default=0.5, help='Map exponent (default: 0.5)')
        parser.add_argument('--eps', type=float, default=0.0, help='Noise level (default: 0, unperturbed)')
        parser.add_argument('--noise', type=str, help='Kernel, e.g. "uniform(0.01)" or "interval(0.9, 1)"')
        parser.add_argument('--mode', choices=['additive', 'parametric'], default='additive')
        parser.add_argument('--x0', type=float, default=0.25, help='Starting point (default: 0.25)')
        parser.add_argument('--steps', type=int, default=1000, help='Number of steps (default: 1000)')
        parser.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')
        parser.add_argument('--out', type=str, help='Write the CSV here instead of stdout')

    def run(self, **options):
        system = build_system(options['mode'], options['alpha'], options['eps'], options['noise'])
        record = random_orbit(system, options['x0'], options['steps'], options['seed'])

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(ORBIT_COLUMNS)
        for row in record.rows():
            writer.writerow([format_float(v) for v in row])

        if options['out']:
            self.write_file(options['out'], buffer.getvalue())
            self.stderr.write(self.style.SUCCESS(f"Wrote {options['out']} ({record.draws_used} steps)"))
        else:
            self.write_text(buffer.getvalue())
