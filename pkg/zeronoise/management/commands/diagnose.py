from dataclasses import asdict

from zeronoise import __version__
from zeronoise.diagnostics import (
    band_constants,
    block_entropy,
    distortion_constant,
    expansion_gap,
    partition_diameter,
    pesin_residual,
    semicontinuity_table,
)
from zeronoise.dynamics import Arc, DoublingMap, IdentityMap, SaddleNodeMap, choose_expansion_band
from zeronoise.exceptions import ConfigError
from zeronoise.perturbation import Mode, RandomSystem, interval_kernel, nondegeneracy_report
from zeronoise.sampling import SeedPolicy, lyapunov_ensemble
from zeronoise.services.config_service import parse_value
from zeronoise.transfer import assemble_annealed, assemble_deterministic, stationary

from ._base import ExperimentCommand, build_system

BASE_MAPS = {
    'intermittent': None,
    'doubling': DoublingMap,
    'identity': IdentityMap,
}

DIAGNOSTICS = (
    'experiment', 'entropy', 'pesin', 'distortion', 'gap', 'partition',
    'band', 'semicontinuity', 'nondegeneracy', 'lyapunov',
)


# single-operation defaults for config keys that diagnose shares with the
# diagnostics experiment
SINGLE_DEFAULTS = {
    'alpha': 0.5,
    'cells': 1024,
    'master_seed': 0,
    'k_cells': 2,
    'n_omega': 8,
    'samples': 100_000,
    'delta0': 0.1,
    'rho0': 0.25,
    's': 0.9,
    'steps': 10_000,
    'n_orbits': 100,
}


class Command(ExperimentCommand):
    help = 'Run one diagnostic and print it as JSON, or the full diagnostics experiment'
    experiment = 'diagnostics'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--what', choices=DIAGNOSTICS, required=True, help='Diagnostic to run')
        parser.add_argument('--eps', type=float, help='Noise level (default: 0.01)')
        parser.add_argument('--mode', choices=['additive', 'parametric'], default='additive')
        parser.add_argument('--map', dest='base_map', choices=sorted(BASE_MAPS), default='intermittent',
                            help='Unperturbed map in additive mode (default: intermittent)')
        parser.add_argument('--n', type=int, default=8, help='Block length / refinement depth (default: 8)')
        parser.add_argument('--start', type=float, default=0.3, help='Arc start for distortion')
        parser.add_argument('--length', type=float, default=0.01, help='Arc length for distortion')
        parser.add_argument('--r', type=float, help='Distortion / band margin')
        parser.add_argument('--record', action='store_true', help='Write a run ledger entry (experiment only)')

    def run(self, **options):
        what = options['what']
        if what == 'experiment':
            options['no_record'] = not options['record']
            return super().run(**options)

        for key, default in SINGLE_DEFAULTS.items():
            options[key] = default if options.get(key) is None else parse_value(key, options[key])
        alpha, cells, seed = options['alpha'], options['cells'], options['master_seed']
        inputs = {'alpha': alpha, 'mode': options['mode'], 'seed': seed}

        if what in ('band', 'semicontinuity'):
            result = getattr(self, f'_{what}')(alpha, cells, seed, options, inputs)
        else:
            system = self._system(alpha, options, inputs)
            result = getattr(self, f'_{what}')(system, cells, seed, options, inputs)

        self.write_json({'what': what, 'version': __version__, 'inputs': inputs, 'result': result})

    def _system(self, alpha, options, inputs):
        eps = 0.01 if options['eps'] is None and not options['noise'] else options['eps']
        system = build_system(options['mode'], alpha, eps, options['noise'])
        map_cls = BASE_MAPS[options['base_map']]
        if map_cls is not None:
            if system.mode is not Mode.ADDITIVE:
                raise ConfigError('--map applies to additive mode only')
            system = RandomSystem(Mode.ADDITIVE, system.kernel, alpha, base_map=map_cls())
            inputs['map'] = options['base_map']
        inputs['noise'] = system.kernel.describe()
        return system

    def _stationary(self, system, cells):
        if system.kernel.is_point:
            if system.mode is Mode.ADDITIVE:
                circle_map = system.base_map
                if system.kernel.center != 0.0:
                    raise ConfigError('A point kernel in additive mode must sit at 0')
            else:
                circle_map = SaddleNodeMap(system.alpha, system.kernel.center)
            P = assemble_deterministic(circle_map, cells)
        else:
            P = assemble_annealed(system, cells)
        return stationary(P, n_starts=1)

    def _entropy_estimate(self, system, cells, seed, options, inputs):
        inputs.update({'cells': cells, 'k_cells': options['k_cells'], 'n': options['n'],
                       'n_omega': options['n_omega'], 'samples': options['samples']})
        mu = self._stationary(system, cells)
        estimate = block_entropy(
            system, mu, options['k_cells'], options['n'], options['n_omega'], options['samples'], SeedPolicy(seed)
        )
        return mu, estimate

    def _entropy(self, system, cells, seed, options, inputs):
        _, estimate = self._entropy_estimate(system, cells, seed, options, inputs)
        result = asdict(estimate)
        result.update({
            'best': estimate.best,
            'best_std_error': estimate.best_std_error,
            'subadditivity_violations': estimate.subadditivity_violations(),
        })
        return result

    def _pesin(self, system, cells, seed, options, inputs):
        mu, estimate = self._entropy_estimate(system, cells, seed, options, inputs)
        return asdict(pesin_residual(system, mu, estimate))

    def _distortion(self, system, cells, seed, options, inputs):
        interval = Arc(options['start'], options['length'])
        inputs.update({'start': interval.start, 'length': interval.length, 'depth': options['n']})
        if system.mode is Mode.PARAMETRIC:
            params = choose_expansion_band(system.alpha, options['s'])
            inputs['s'] = options['s']
        else:
            params = system.kernel.sample(SeedPolicy(seed).generator(0, label='distortion'), options['n'])
        report = distortion_constant(system, params, interval, options['n'], r=options['r'], seed=seed)
        return {'C': report.C, 'r': report.r, 'depth': report.depth}

    def _gap(self, system, cells, seed, options, inputs):
        inputs.update({'delta0': options['delta0'], 'rho0': options['rho0']})
        return asdict(expansion_gap(system, options['delta0'], options['rho0']))

    def _partition(self, system, cells, seed, options, inputs):
        inputs.update({'k_cells': options['k_cells'], 'n': options['n']})
        return {'diameter': partition_diameter(system, seed, options['k_cells'], options['n'])}

    def _nondegeneracy(self, system, cells, seed, options, inputs):
        report = nondegeneracy_report(system)
        return {
            'radius': report.radius,
            'absolutely_continuous': report.absolutely_continuous,
            'degenerate_points': report.degenerate_points,
        }

    def _lyapunov(self, system, cells, seed, options, inputs):
        inputs.update({'steps': options['steps'], 'n_orbits': options['n_orbits']})
        estimate = lyapunov_ensemble(system, options['n_orbits'], options['steps'], SeedPolicy(seed))
        return {'mean': estimate.mean, 'std_error': estimate.std_error}

    def _band(self, alpha, cells, seed, options, inputs):
        inputs['s'] = options['s']
        band = choose_expansion_band(alpha, options['s'])
        r = options['r'] if options['r'] is not None else band.p_u / 2.0
        system = RandomSystem(Mode.PARAMETRIC, interval_kernel(band.s, band.u), alpha)
        distortion = distortion_constant(system, band, Arc(band.p_u, 0.5 - 2.0 * band.p_u), 1, r=r, seed=seed)
        constants = band_constants(alpha, band, r, C=distortion.C)
        result = asdict(band)
        result.update(asdict(constants))
        result['r'] = r
        return result

    def _semicontinuity(self, alpha, cells, seed, options, inputs):
        ladder = parse_value('eps_ladder', options['eps_ladder']) if options['eps_ladder'] else (0.05, 0.02, 0.01)
        inputs.update({'eps_ladder': list(ladder), 'cells': cells, 'k_cells': options['k_cells'], 'n': options['n']})
        table = semicontinuity_table(
            alpha, ladder, cells=cells, k_cells=options['k_cells'], n_max=options['n'],
            n_omega=options['n_omega'], samples=options['samples'], seeds=SeedPolicy(seed),
        )
        return {'rokhlin': table.rokhlin, 'rows': list(table.rows), 'verdict': table.verdict.value}
