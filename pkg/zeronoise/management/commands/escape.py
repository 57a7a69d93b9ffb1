import csv
import io

from zeronoise.dynamics import choose_expansion_band
from zeronoise.perturbation import interval_kernel
from zeronoise.sampling import SeedPolicy, escape_ensemble
from zeronoise.utils import format_float

from ._base import LabCommand

ESCAPE_COLUMNS = ('trial', 'x0', 'escape_step', 'escaped')


class Command(LabCommand):
    help = 'Escape times from the repeller belt of the saddle-node band, as CSV'

    def add_arguments(self, parser):
        parser.add_argument('--alpha', type=float, default=0.5, help='Map exponent (default: 0.5)')
        parser.add_argument('--s', type=float, default=0.9, help='Lower end of the band (default: 0.9)')
        parser.add_argument('--trials', type=int, default=1000, help='Number of starts (default: 1000)')
        parser.add_argument('--nmax', '--n-max', dest='n_max', type=int, default=10 ** 6,
                            help='Step budget per start (default: 1e6)')
        parser.add_argument('--seed', type=int, default=0, help='Master seed (default: 0)')
        parser.add_argument('--out', type=str, help='Write the CSV here instead of stdout')

    def run(self, **options):
        band = choose_expansion_band(options['alpha'], options['s'])
        kernel = interval_kernel(band.s, band.u)
        ensemble = escape_ensemble(
            options['alpha'], band, kernel, options['trials'], options['n_max'], SeedPolicy(options['seed'])
        )

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(ESCAPE_COLUMNS)
        for row in ensemble.rows():
            writer.writerow([format_float(v) for v in row])

        if options['out']:
            self.write_file(options['out'], buffer.getvalue())
        else:
            self.write_text(buffer.getvalue())
        self.stderr.write(
            f'Band [{band.s!r}, {band.u!r}], p_u={band.p_u!r}: '
            f'{ensemble.escaped_fraction:.4f} of {options["trials"]} starts escaped'
        )
