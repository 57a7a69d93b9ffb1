from zeronoise.exceptions import InputError
from zeronoise.measures import mass_near_zero, read_density_csv, tv_grid, w1_circle

from ._base import LabCommand


class Command(LabCommand):
    help = 'Distances between density CSVs, or the mass near 0 of one'

    def add_arguments(self, parser):
        parser.add_argument('--a', required=True, metavar='FILE',
                            help='Density CSV (cell_index,cell_left,weight,density)')
        parser.add_argument('--b', metavar='FILE', help='Second density CSV (w1 and tv)')
        parser.add_argument('--metric', choices=['w1', 'tv', 'mass'], default='w1', help='Default: w1')
        parser.add_argument('--delta', type=float, default=0.05, help='Arc half-width for --metric mass')

    def run(self, **options):
        mu = read_density_csv(options['a'])
        metric = options['metric']
        document = {'metric': metric, 'a': options['a']}

        if metric == 'mass':
            document['delta'] = options['delta']
            document['value'] = mass_near_zero(mu, options['delta'])
        else:
            if not options['b']:
                raise InputError(f'--metric {metric} needs a second density file (--b)')
            nu = read_density_csv(options['b'])
            document['b'] = options['b']
            document['value'] = w1_circle(mu, nu) if metric == 'w1' else tv_grid(mu, nu)

        self.write_json(document)
