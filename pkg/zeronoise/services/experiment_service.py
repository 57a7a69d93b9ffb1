"""
Theorem-level experiment drivers

Each driver takes a validated ExperimentConfig, runs its stages and returns
a Report. Sweep points are independent and are computed either in a local
process pool or as a Celery group; rows always come back in ladder order.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from functools import lru_cache

from django.conf import settings

from ..dynamics import Arc, IntermittentMap, choose_expansion_band, covering_time, covering_trace
from ..diagnostics import block_entropy, expansion_gap, partition_diameter, pesin_residual, semicontinuity_table
from ..exceptions import ConfigError, LabError, StageError
from ..measures import dirac_zero, distance_to_E, mass_near_zero, w1_circle
from ..perturbation import Mode, RandomSystem, interval_kernel, parse_noise, point_kernel, uniform_kernel
from ..sampling import empirical_stationary, escape_ensemble, funnel_check
from ..transfer import assemble_annealed, assemble_deterministic, deterministic_mass_trend, stationary
from ..utils import Verdict
from .report_service import Report, SweepReport

logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12
TRACE_HEAD = 256
FUNNEL_SHORT = 100
TREND_CELLS = (64, 128, 256)


@contextmanager
def stage(name):
    """Re-raise lab errors from a driver stage as StageError naming the stage"""
    logger.info(f"Stage '{name}' started")
    try:
        yield
    except StageError:
        raise
    except LabError as e:
        logger.error(f"Stage '{name}' failed: {e}")
        raise StageError(name, e) from e
    logger.info(f"Stage '{name}' finished")


@lru_cache(maxsize=4)
def srb_reference(alpha, cells, tol, max_iter):
    """Deterministic Ulam vector of T; cached per process"""
    P = assemble_deterministic(IntermittentMap(alpha), cells)
    return stationary(P, tol=tol, max_iter=max_iter, n_starts=1)


def compute_sweep_point(config_data, index):
    """
    One sweep row: annealed stationary density at eps_ladder[index]

    Takes the config as a plain dict so it can cross process and broker
    boundaries.

    Returns:
        Row dict; the w1_to_srb and mixture fields are None for alpha >= 1
    """
    from .config_service import ExperimentConfig

    config = ExperimentConfig.from_dict(config_data)
    eps = config.eps_ladder[index]
    started = time.perf_counter()

    system = RandomSystem(Mode.ADDITIVE, uniform_kernel(eps), config.alpha)
    P = assemble_annealed(system, config.cells, config.quad_order)
    mu = stationary(P, tol=config.tol, max_iter=config.max_iter, n_starts=config.n_starts, seed=config.master_seed)

    row = {
        'eps': float(eps),
        'w1_to_dirac': w1_circle(mu, dirac_zero(config.cells)),
        'w1_to_srb': None,
        'mass_near_zero': mass_near_zero(mu, config.delta),
        'mixture_t': None,
        'mixture_distance': None,
        'residual': float(mu.residual),
        'multiplicity': bool(mu.multiplicity),
    }
    if config.alpha < 1.0:
        srb = srb_reference(config.alpha, config.cells, config.tol, config.max_iter)
        estimate = distance_to_E(mu, srb, config.t_grid)
        row['w1_to_srb'] = w1_circle(mu, srb)
        row['mixture_t'] = estimate.t_weight
        row['mixture_distance'] = estimate.distance
    row['runtime'] = time.perf_counter() - started
    logger.info(f"Sweep point eps={eps}: w1_to_dirac={row['w1_to_dirac']:.6g}, runtime={row['runtime']:.2f}s")
    return row


def _non_increasing(values):
    return all(b <= a + MONOTONE_SLACK for a, b in zip(values, values[1:]))


def _strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def _strictly_increasing(values):
    return all(b > a for a, b in zip(values, values[1:]))


def _check(condition):
    return Verdict.PASS if condition else Verdict.FAIL


def _flag(condition):
    return Verdict.PASS if condition else Verdict.FLAGGED


class ExperimentService:
    """
    Runs the lab experiments

    Args:
        backend: 'local' or 'celery' (default settings.LAB_BACKEND)
        workers: Worker count for the local backend; config.workers and then
            settings.LAB_THREADS apply when unset
    """

    def __init__(self, backend=None, workers=None):
        self.backend = backend or settings.LAB_BACKEND
        self.workers = workers
        if self.backend not in ('local', 'celery'):
            raise ConfigError(f"Unknown backend {self.backend!r}")

    def run(self, config):
        drivers = {
            'thmA_sweep': self.run_thmA,
            'thmB_sweep': self.run_thmB,
            'thmC_instability': self.run_thmC,
            'mixing': self.run_mixing,
            'diagnostics': self.run_diagnostics,
        }
        return drivers[config.experiment](config)

    def _worker_count(self, config, n_points):
        workers = self.workers or config.workers or settings.LAB_THREADS
        return max(1, min(int(workers), n_points))

    def map_points(self, config):
        """Compute every sweep point; the result is in ladder order"""
        data = config.to_dict()
        indices = list(range(len(config.eps_ladder)))

        if self.backend == 'celery':
            from celery import group
            from ..tasks import compute_sweep_point as sweep_task

            logger.info(f"Dispatching {len(indices)} sweep points to Celery")
            result = group(sweep_task.s(data, i) for i in indices).apply_async()
            return result.get()

        workers = self._worker_count(config, len(indices))
        logger.info(f"Computing {len(indices)} sweep points on {workers} local worker(s)")
        if workers == 1:
            return [compute_sweep_point(data, i) for i in indices]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(compute_sweep_point, [data] * len(indices), indices))

    def _sweep(self, config):
        config.validate()
        with stage('sweep'):
            rows = self.map_points(config)
        multiplicity = any(row['multiplicity'] for row in rows)
        return rows, multiplicity

    def run_thmA(self, config):
        """
        Mixture-distance sweep for alpha in (0, 1)

        Returns:
            SweepReport with mixture_distance expected non-increasing
        """
        if config.experiment != 'thmA_sweep':
            raise ConfigError(f"run_thmA needs a thmA_sweep config, got {config.experiment}")
        if not 0.0 < config.alpha < 1.0:
            raise ConfigError(f"thmA_sweep needs alpha in (0, 1), got {config.alpha}")
        logger.info(f"Running thmA_sweep: alpha={config.alpha}, ladder={list(config.eps_ladder)}, cells={config.cells}")

        with stage('srb'):
            srb = srb_reference(config.alpha, config.cells, config.tol, config.max_iter)
        rows, multiplicity = self._sweep(config)

        distances = [row['mixture_distance'] for row in rows]
        verdicts = {
            'mixture_distance_non_increasing': _check(_non_increasing(distances)),
            'stationary_unique': Verdict.FLAGGED if multiplicity else Verdict.PASS,
        }
        summary = {
            'srb_residual': float(srb.residual),
            'srb_mass_near_zero': mass_near_zero(srb, config.delta),
            'mixture_distance_last': distances[-1],
            'mixture_t_last': rows[-1]['mixture_t'],
        }
        return SweepReport(experiment=config.experiment, config=config, rows=rows, summary=summary, verdicts=verdicts)

    def run_thmB(self, config):
        """
        Concentration sweep for alpha >= 1

        Returns:
            SweepReport; w1_to_dirac should fall and mass_near_zero rise
        """
        if config.experiment != 'thmB_sweep':
            raise ConfigError(f"run_thmB needs a thmB_sweep config, got {config.experiment}")
        if config.alpha < 1.0:
            raise ConfigError(f"thmB_sweep needs alpha >= 1, got {config.alpha}")
        logger.info(f"Running thmB_sweep: alpha={config.alpha}, ladder={list(config.eps_ladder)}, cells={config.cells}")

        rows, multiplicity = self._sweep(config)
        w1 = [row['w1_to_dirac'] for row in rows]
        mass = [row['mass_near_zero'] for row in rows]

        verdicts = {
            'w1_to_dirac_decreasing': _check(_strictly_decreasing(w1)),
            'mass_near_zero_increasing': _check(_strictly_increasing(mass)),
            'stationary_unique': Verdict.FLAGGED if multiplicity else Verdict.PASS,
        }
        if len(rows) > 1:
            # a rate target, the limit itself carries no rate
            verdicts['w1_to_dirac_halved'] = _flag(w1[-1] <= 0.5 * w1[0])
        summary = {
            'w1_ratio_last_first': w1[-1] / w1[0] if w1[0] > 0 else None,
            'mass_near_zero_last': mass[-1],
        }
        return SweepReport(experiment=config.experiment, config=config, rows=rows, summary=summary, verdicts=verdicts)

    def run_thmC(self, config):
        """
        Instability exhibit for the saddle-node family

        Builds the expansion band for s, runs the escape ensemble and the
        funnel orbit, pools the empirical stationary measure of the
        parametric system and sets it against the deterministic SRB density
        of T.

        Returns:
            Report whose rows are the escape ensemble
        """
        if config.experiment != 'thmC_instability':
            raise ConfigError(f"run_thmC needs a thmC_instability config, got {config.experiment}")
        if not 0.0 < config.alpha < 1.0:
            raise ConfigError(f"thmC_instability needs alpha in (0, 1), got {config.alpha}")
        if not 0.0 < config.s < 1.0:
            raise ConfigError(f"thmC_instability needs s in (0, 1), got {config.s}")
        config.validate()
        seeds = config.seeds
        logger.info(f"Running thmC_instability: alpha={config.alpha}, s={config.s}, trials={config.trials}")

        with stage('band'):
            band = choose_expansion_band(config.alpha, config.s)
            kernel = interval_kernel(band.s, band.u)

        with stage('escape'):
            ensemble = escape_ensemble(config.alpha, band, kernel, config.trials, config.n_max, seeds)

        with stage('funnel'):
            x0 = band.p_u / 2.0
            short = funnel_check(config.alpha, band, kernel, x0, FUNNEL_SHORT, config.master_seed)
            long = funnel_check(config.alpha, band, kernel, x0, max(config.steps, FUNNEL_SHORT), config.master_seed)

        with stage('empirical'):
            system = RandomSystem(Mode.PARAMETRIC, kernel, config.alpha)
            empirical = empirical_stationary(system, config.n_orbits, config.burn_in, config.keep, seeds)
            empirical_mass = mass_near_zero(empirical, config.delta)
            empirical_w1 = w1_circle(empirical, dirac_zero(config.cells))

        with stage('srb'):
            srb = srb_reference(config.alpha, config.cells, config.tol, config.max_iter)
            srb_mass = mass_near_zero(srb, config.delta)

        verdicts = {
            'escape': _check(ensemble.escaped_fraction >= 0.99),
            'funnel': _check(long <= short),
            'concentration': _check(empirical_mass >= 0.99 and empirical_w1 <= 0.01),
            'srb_contrast': _check(srb_mass <= 0.5),
        }
        summary = {
            'band': {
                's': band.s, 'u': band.u, 'p_s': band.p_s, 'p_u': band.p_u,
                'min_derivative': band.min_derivative,
            },
            'escaped_fraction': ensemble.escaped_fraction,
            'funnel_distance_short': short,
            'funnel_distance_long': long,
            'empirical_mass_near_zero': empirical_mass,
            'empirical_w1_to_dirac': empirical_w1,
            'srb_mass_near_zero': srb_mass,
        }
        rows = [
            {'trial': trial, 'x0': x, 'escape_step': step, 'escaped': escaped}
            for trial, x, step, escaped in ensemble.rows()
        ]
        return Report(
            experiment=config.experiment,
            config=config,
            columns=('trial', 'x0', 'escape_step', 'escaped'),
            rows=rows,
            summary=summary,
            verdicts=verdicts,
        )

    def run_mixing(self, config):
        """
        Covering time of each configured arc under T

        Exhaustion is a per-arc flag, not an error.
        """
        if config.experiment != 'mixing':
            raise ConfigError(f"run_mixing needs a mixing config, got {config.experiment}")
        if not config.arcs:
            raise ConfigError("mixing needs at least one arc")
        config.validate()
        circle_map = IntermittentMap(config.alpha)

        rows, verdicts = [], {}
        with stage('covering'):
            for index, (start, length) in enumerate(config.arcs):
                try:
                    arc = Arc(start, length)
                except LabError as e:
                    raise ConfigError(f"arc {index}: {e}")
                n = covering_time(circle_map, arc, config.n_max)
                trace = covering_trace(circle_map, arc, min(config.n_max, TRACE_HEAD - 1))
                steps = config.n_max if n is None else n
                monotone = all(b >= a for a, b in zip(trace, trace[1:]))
                rows.append({
                    'arc': index,
                    'start': arc.start,
                    'length': arc.length,
                    'covering_time': n,
                    'exhausted': n is None,
                    'lengths': trace,
                    'trace_truncated': steps + 1 > TRACE_HEAD,
                })
                if not monotone:
                    verdicts[f'arc_{index}'] = Verdict.FAIL
                else:
                    verdicts[f'arc_{index}'] = Verdict.FLAGGED if n is None else Verdict.PASS
                logger.info(f"Arc {index} [{arc.start}, +{arc.length}]: covering_time={n}")

        return Report(
            experiment=config.experiment,
            config=config,
            columns=('arc', 'start', 'length', 'covering_time', 'exhausted'),
            rows=rows,
            summary={
                'covered': sum(row['covering_time'] is not None for row in rows),
                'arcs': len(rows),
                'traces': [{'arc': row['arc'], 'lengths': row['lengths'], 'truncated': row['trace_truncated']} for row in rows],
            },
            verdicts=verdicts,
        )

    def _diagnostic_kernel(self, config):
        if config.noise:
            return parse_noise(config.noise)
        if not config.eps_ladder:
            raise ConfigError("diagnostics needs `noise` or a non-empty eps_ladder")
        return uniform_kernel(config.eps_ladder[-1])

    def run_diagnostics(self, config):
        """
        Entropy, Pesin residual, expansion gap and partition refinement for
        the configured alpha and noise; the entropy semicontinuity table for
        alpha < 1, the deterministic concentration trend otherwise.
        """
        if config.experiment != 'diagnostics':
            raise ConfigError(f"run_diagnostics needs a diagnostics config, got {config.experiment}")
        config.validate()
        seeds = config.seeds
        kernel = self._diagnostic_kernel(config)
        system = RandomSystem(Mode.ADDITIVE, kernel, config.alpha)
        logger.info(f"Running diagnostics: {system.describe()}, cells={config.cells}")

        with stage('stationary'):
            mu = stationary(
                assemble_annealed(system, config.cells, config.quad_order),
                tol=config.tol, max_iter=config.max_iter, n_starts=config.n_starts, seed=config.master_seed,
            )

        with stage('entropy'):
            entropy = block_entropy(
                system, mu, config.k_cells, config.block_max, config.n_omega, config.samples, seeds
            )
            pesin = pesin_residual(system, mu, entropy)

        with stage('gap'):
            deterministic = RandomSystem(Mode.ADDITIVE, point_kernel(0.0), config.alpha)
            gap = expansion_gap(deterministic, config.delta0, config.rho0)

        with stage('partition'):
            depth = config.block_max
            coarse = partition_diameter(system, config.master_seed, config.k_cells, depth)
            fine = partition_diameter(system, config.master_seed, config.k_cells, min(2 * depth, 24))

        summary = {
            'entropy': entropy.best,
            'entropy_std_error': entropy.best_std_error,
            'pesin_residual': pesin.residual,
            'pesin_integral': pesin.integral,
            'gap_beta': gap.beta,
            'gap_argmin': gap.argmin,
            'partition_diameter': {str(depth): coarse, str(min(2 * depth, 24)): fine},
            'stationary_residual': float(mu.residual),
        }
        verdicts = {
            'entropy_subadditive': _check(not entropy.subadditivity_violations()),
            'entropy_sampling': Verdict.FLAGGED if entropy.undersampled else Verdict.PASS,
            'gap_positive': _check(gap.beta > 0.0),
            'partition_refines': _check(fine <= coarse),
        }

        if config.alpha < 1.0:
            ladder = config.eps_ladder or (kernel.width / 2.0,)
            with stage('semicontinuity'):
                table = semicontinuity_table(
                    config.alpha, ladder, cells=config.cells, k_cells=config.k_cells, n_max=config.block_max,
                    n_omega=config.n_omega, samples=config.samples, seeds=seeds, tol=config.tol,
                    max_iter=config.max_iter,
                )
            summary['rokhlin'] = table.rokhlin
            summary['semicontinuity'] = list(table.rows)
            verdicts['semicontinuity'] = table.verdict
        else:
            with stage('deterministic_trend'):
                trend = deterministic_mass_trend(config.alpha, TREND_CELLS, config.delta, config.tol, config.max_iter)
            summary['deterministic_mass_trend'] = [{'cells': n, 'mass_near_zero': m} for n, m in trend]

        rows = [
            {'block': n, 'entropy_rate': h, 'std_error': se, 'undersampled': n in entropy.undersampled_blocks}
            for n, h, se in zip(entropy.block_lengths, entropy.h_values, entropy.std_errors)
        ]
        return Report(
            experiment=config.experiment,
            config=config,
            columns=('block', 'entropy_rate', 'std_error', 'undersampled'),
            rows=rows,
            summary=summary,
            verdicts=verdicts,
        )
