"""
Seeded Monte Carlo along random orbits

Every orbit reads its own substream: substream i of master seed m is
PCG64(SeedSequence(m, spawn_key=(i,))), optionally salted with a label so
unrelated experiments sharing a master seed do not share draws. Orbits are
advanced together as numpy vectors; draws are taken from each orbit's stream
in order, so results do not depend on how orbits are batched.
"""

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import circle_point, saddle_affine_parts
from .exceptions import ContractViolation, ParameterError
from .measures import EmpiricalMeasure
from .perturbation import Mode, RandomSystem
from .utils import circle_distance, wrap

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 10_000
DEFAULT_KEEP = 1_000
DEFAULT_N_ORBITS = 1_000
DRAW_CHUNK = 4096
ORBIT_BATCH = 1024
ENVELOPE_TOLERANCE = 1e-15


def derive_stream_key(label):
    """Stable 32-bit key for a text label"""
    digest = hashlib.sha256(str(label).encode('utf-8')).hexdigest()
    return int(digest, 16) % (2 ** 32)


@dataclass(frozen=True)
class SeedPolicy:
    """
    Master seed plus the rule that splits it into substreams

    generator(i) and generator(i, label) are reproducible and distinct for
    distinct (label, i).
    """

    master_seed: int

    def __post_init__(self):
        seed = self.master_seed
        if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) < 2 ** 64:
            raise ParameterError(f"master_seed must be an integer in [0, 2^64), got {seed}")
        object.__setattr__(self, 'master_seed', int(seed))

    def sequence(self, index, label=None):
        key = (int(index),) if label is None else (derive_stream_key(label), int(index))
        return np.random.SeedSequence(self.master_seed, spawn_key=key)

    def generator(self, index, label=None):
        return np.random.Generator(np.random.PCG64(self.sequence(index, label)))

    def generators(self, indices, label=None):
        return [self.generator(i, label) for i in indices]


@dataclass(frozen=True, eq=False)
class OrbitRecord:
    seed: int
    states: np.ndarray = field(repr=False)
    draws: np.ndarray = field(repr=False)
    log_derivs: np.ndarray = field(repr=False)

    @property
    def draws_used(self):
        return int(self.draws.size)

    @property
    def log_deriv_sum(self):
        return float(np.sum(self.log_derivs))

    def rows(self):
        """(step, state, draw, log_deriv); step 0 carries no draw"""
        out = [(0, float(self.states[0]), None, None)]
        for j in range(self.draws_used):
            out.append((j + 1, float(self.states[j + 1]), float(self.draws[j]), float(self.log_derivs[j])))
        return out


@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    mean: float
    std_error: float
    per_orbit: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class EscapeEnsemble:
    x0: np.ndarray = field(repr=False)
    steps: list = field(repr=False)
    n_max: int = 0

    @property
    def escaped(self):
        return np.array([s is not None for s in self.steps], dtype=bool)

    @property
    def escaped_fraction(self):
        return float(self.escaped.mean()) if self.steps else 0.0

    def rows(self):
        return [
            (i, float(x), step, step is not None)
            for i, (x, step) in enumerate(zip(self.x0, self.steps))
        ]


def _check_steps(n, name='n'):
    if int(n) != n or n < 1:
        raise ParameterError(f"{name} must be a positive integer, got {n}")
    return int(n)


def _draw_block(kernel, generators, size):
    return np.stack([kernel.sample(g, size) for g in generators])


def random_orbit(system, x0, n, seed):
    """
    Orbit x_0, ..., x_n of the random system under seeded draws

    Args:
        system: RandomSystem
        x0: Starting point
        n: Number of steps
        seed: Master seed; the orbit uses substream 0

    Returns:
        OrbitRecord
    """
    n = _check_steps(n)
    rng = SeedPolicy(seed).generator(0)
    draws = system.kernel.sample(rng, n)
    states = np.empty(n + 1)
    log_derivs = np.empty(n)
    x = np.float64(circle_point(x0))
    states[0] = x
    for j in range(n):
        t = draws[j]
        log_derivs[j] = np.log(system.derivative_raw(x, t))
        x = system.step_raw(x, t)
        states[j + 1] = x
    return OrbitRecord(seed=int(seed), states=states, draws=draws, log_derivs=log_derivs)


def empirical_stationary(system, n_orbits=DEFAULT_N_ORBITS, burn_in=DEFAULT_BURN_IN, keep=DEFAULT_KEEP, seeds=None, batch=ORBIT_BATCH):
    """
    Pool post-burn-in states of independent orbits

    Orbit i starts at a uniform point drawn from substream i and then reads
    its draws from the same substream. States x_{burn_in+1}..x_{burn_in+keep}
    are kept; the pool is ordered by orbit index.

    Returns:
        EmpiricalMeasure with n_orbits * keep samples
    """
    n_orbits = _check_steps(n_orbits, 'n_orbits')
    keep = _check_steps(keep, 'keep')
    if burn_in < 0:
        raise ParameterError(f"burn_in must be >= 0, got {burn_in}")
    seeds = seeds or SeedPolicy(0)
    logger.info(
        f"Sampling empirical stationary measure: {system.describe()}, orbits={n_orbits}, "
        f"burn_in={burn_in}, keep={keep}, master_seed={seeds.master_seed}"
    )

    total = burn_in + keep
    pooled = np.empty((n_orbits, keep))
    for first in range(0, n_orbits, batch):
        last = min(first + batch, n_orbits)
        generators = seeds.generators(range(first, last))
        x = np.array([g.random() for g in generators])
        done = 0
        while done < total:
            size = min(DRAW_CHUNK, total - done)
            draws = _draw_block(system.kernel, generators, size)
            for j in range(size):
                x = system.step_raw(x, draws[:, j])
                kept = done + j - burn_in
                if kept >= 0:
                    pooled[first:last, kept] = x
            done += size
    return EmpiricalMeasure(pooled.ravel())


def lyapunov(system, x0, n, seed):
    """(1/n) times the log-derivative sum along one random orbit"""
    record = random_orbit(system, x0, n, seed)
    return record.log_deriv_sum / record.draws_used


def lyapunov_ensemble(system, n_orbits, n, seeds, burn_in=0):
    """
    Mean Lyapunov exponent over independent orbits

    Each orbit is one batch; the standard error is the batch-mean one.
    """
    n_orbits = _check_steps(n_orbits, 'n_orbits')
    if n_orbits < 2:
        raise ParameterError("lyapunov_ensemble needs at least two orbits for an error bar")
    n = _check_steps(n)
    generators = seeds.generators(range(n_orbits))
    x = np.array([g.random() for g in generators])
    sums = np.zeros(n_orbits)
    total = burn_in + n
    done = 0
    while done < total:
        size = min(DRAW_CHUNK, total - done)
        draws = _draw_block(system.kernel, generators, size)
        for j in range(size):
            t = draws[:, j]
            if done + j >= burn_in:
                sums += np.log(system.derivative_raw(x, t))
            x = system.step_raw(x, t)
        done += size

    per_orbit = sums / n
    estimate = LyapunovEstimate(
        mean=float(per_orbit.mean()),
        std_error=float(per_orbit.std(ddof=1) / np.sqrt(n_orbits)),
        per_orbit=per_orbit,
    )
    logger.info(f"Lyapunov ensemble: mean={estimate.mean:.6f} +/- {estimate.std_error:.2e} over {n_orbits} orbits")
    return estimate


def birkhoff_average(system, observable, x0, n, seed):
    """Time average (1/n) sum_{j<n} observable(x_j) along a random orbit"""
    record = random_orbit(system, x0, n, seed)
    return float(np.mean(observable(record.states[:-1])))


def _band_system(alpha, band, kernel):
    tol = 1e-12
    if kernel.support_lo < band.s - tol or kernel.support_hi > band.u + tol:
        raise ParameterError(
            f"Kernel support [{kernel.support_lo}, {kernel.support_hi}] must lie in the band [{band.s}, {band.u}]"
        )
    return RandomSystem(Mode.PARAMETRIC, kernel, alpha)


def escape_time(alpha, band, kernel, x0, n_max, seed):
    """
    First n <= n_max with the orbit outside the closed belt [p_u, 1 - p_u]

    Returns:
        Integer, or None when n_max steps pass without escape

    Raises:
        ContractViolation: x0 outside [p_u, 1 - p_u]
    """
    system = _band_system(alpha, band, kernel)
    if not band.contains_start(x0):
        raise ContractViolation(f"x0={x0} outside the belt [{band.p_u}, {1.0 - band.p_u}]")
    if n_max <= 0:
        return None

    rng = SeedPolicy(seed).generator(0)
    x = np.float64(x0)
    lo, hi = band.p_u, 1.0 - band.p_u
    n = 0
    while n < n_max:
        draws = kernel.sample(rng, min(DRAW_CHUNK, n_max - n))
        for t in draws:
            n += 1
            x = system.step_raw(x, t)
            if x < lo or x > hi:
                return n
    return None


def escape_ensemble(alpha, band, kernel, trials, n_max, seeds):
    """
    Escape times from uniform starts on the belt, one substream per trial

    Returns:
        EscapeEnsemble
    """
    system = _band_system(alpha, band, kernel)
    trials = _check_steps(trials, 'trials')
    lo, hi = band.p_u, 1.0 - band.p_u
    generators = seeds.generators(range(trials), label='escape')
    x0 = np.array([lo + (hi - lo) * g.random() for g in generators])

    steps = np.full(trials, -1, dtype=np.int64)
    x = x0.copy()
    n = 0
    while n < n_max and np.any(steps < 0):
        size = min(DRAW_CHUNK, n_max - n)
        draws = _draw_block(kernel, generators, size)
        for j in range(size):
            x = system.step_raw(x, draws[:, j])
            out = (steps < 0) & ((x < lo) | (x > hi))
            steps[out] = n + j + 1
        n += size

    result = EscapeEnsemble(
        x0=x0,
        steps=[int(s) if s >= 0 else None for s in steps],
        n_max=int(n_max),
    )
    logger.info(f"Escape ensemble: {result.escaped_fraction:.4f} of {trials} trials escaped within {n_max} steps")
    return result


def funnel_check(alpha, band, kernel, x0, n, seed):
    """
    Follow an orbit started inside the funnel (1 - p_u, p_u) around 0

    Checks f_s <= f_t <= f_u at every visited point (mirrored onto
    [0, 1/2] when the orbit sits left of 0).

    Returns:
        Circle distance of x_n to 0

    Raises:
        ContractViolation: x0 outside the funnel, or the envelope fails
    """
    system = _band_system(alpha, band, kernel)
    if not float(circle_distance(x0, 0.0)) < band.p_u:
        raise ContractViolation(f"x0={x0} outside the funnel (1 - p_u, p_u) with p_u={band.p_u}")
    n = _check_steps(n)

    rng = SeedPolicy(seed).generator(0)
    x = np.float64(wrap(x0))
    done = 0
    while done < n:
        draws = kernel.sample(rng, min(DRAW_CHUNK, n - done))
        for t in draws:
            y = min(x, 1.0 - x)
            if y > 0.0:
                a, b = saddle_affine_parts(alpha, y)
                lower, mid, upper = band.s * a + b, t * a + b, band.u * a + b
                slack = ENVELOPE_TOLERANCE * max(1.0, abs(float(mid)))
                if not (lower <= mid + slack and mid <= upper + slack):
                    raise ContractViolation(f"Envelope f_s <= f_t <= f_u violated at x={float(x)!r}, t={t!r}")
            x = system.step_raw(x, t)
        done += len(draws)
    return float(circle_distance(x, 0.0))
