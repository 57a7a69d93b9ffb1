"""
Diagnostics that put numbers on the qualitative statements behind the
zero-noise limits: random entropy, the entropy formula, bounded distortion,
the expansion gap away from 0, and shrinking itinerary atoms.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dynamics import Arc, ExpansionBand, IntermittentMap, saddle_branch_derivative
from .exceptions import HypothesisError, ParameterError
from .measures import EmpiricalMeasure
from .perturbation import Mode, RandomSystem, point_kernel, uniform_kernel
from .sampling import SeedPolicy
from .transfer import GridMeasure, assemble_annealed, assemble_deterministic, stationary
from .utils import Verdict, circle_distance, cell_centers, wrap

logger = logging.getLogger(__name__)

MAX_BLOCK = 24
WORD_LIMIT = 2 ** 24
DEFAULT_N_OMEGA = 32
DEFAULT_SAMPLES = 100_000
GRID_EXPONENT = 20


def entropy_plug_in(counts):
    """Plug-in entropy (nats) of a count vector"""
    counts = np.asarray(counts, dtype=np.float64)
    return float(stats.entropy(counts[counts > 0]))


def entropy_miller_madow(counts):
    """Plug-in entropy plus the Miller-Madow correction (K - 1) / (2M)"""
    counts = np.asarray(counts)
    occupied = int(np.count_nonzero(counts))
    total = float(counts.sum())
    return entropy_plug_in(counts) + (occupied - 1) / (2.0 * total)


def block_lengths(n_max):
    """1, 2, 4, ... up to n_max, with n_max itself appended"""
    lengths = []
    n = 1
    while n <= n_max:
        lengths.append(n)
        n *= 2
    if lengths[-1] != n_max:
        lengths.append(n_max)
    return tuple(lengths)


@dataclass(frozen=True)
class EntropyEstimate:
    partition_size: int
    block_lengths: tuple
    h_values: tuple
    std_errors: tuple
    samples_per_block: int
    n_omega: int
    undersampled_blocks: tuple = ()

    @property
    def undersampled(self):
        return bool(self.undersampled_blocks)

    @property
    def best_index(self):
        return int(np.argmin(self.h_values))

    @property
    def best(self):
        """Smallest H_n/n over the block lengths"""
        return float(self.h_values[self.best_index])

    @property
    def best_std_error(self):
        return float(self.std_errors[self.best_index])

    def subadditivity_violations(self, n_se=2.0):
        """Block pairs (n, 2n) with H_2n/2n > H_n/n + n_se standard errors"""
        h = dict(zip(self.block_lengths, self.h_values))
        se = dict(zip(self.block_lengths, self.std_errors))
        violations = []
        for n in self.block_lengths:
            if 2 * n in h and h[2 * n] > h[n] + n_se * np.hypot(se[n], se[2 * n]):
                violations.append(n)
        return violations


def _draw_points(source, size, rng):
    if isinstance(source, GridMeasure):
        p = source.weights / source.weights.sum()
        cells = rng.choice(source.n_cells, size=size, p=p)
        return (cells + rng.random(size)) / source.n_cells
    if isinstance(source, EmpiricalMeasure):
        return rng.choice(source.samples, size=size, replace=True)
    raise ParameterError(f"Unsupported stationary source {type(source).__name__}")


def _symbols(x, k_cells):
    return np.minimum(np.floor(x * k_cells).astype(np.int64), k_cells - 1)


def block_entropy(system, source, k_cells=2, n_max=8, n_omega=DEFAULT_N_OMEGA, samples=DEFAULT_SAMPLES, seeds=None):
    """
    Finite-block estimate of the random entropy with respect to k equal arcs

    For each omega (one drawn parameter sequence) `samples` points are drawn
    from the stationary source and coded by their itineraries through the
    arcs. The Miller-Madow corrected entropy of the n-words, divided by n, is
    averaged over omega.

    Args:
        system: RandomSystem
        source: GridMeasure or EmpiricalMeasure the points are drawn from
        k_cells: Number of equal arcs in the partition
        n_max: Longest block; k_cells**n_max must not exceed 2**24
        n_omega: Number of parameter sequences
        samples: Points per parameter sequence
        seeds: SeedPolicy (substream i, label 'entropy', drives omega i)

    Returns:
        EntropyEstimate over n = 1, 2, 4, ..., n_max
    """
    if k_cells < 2:
        raise ParameterError(f"k_cells must be >= 2, got {k_cells}")
    if not 1 <= n_max <= MAX_BLOCK:
        raise ParameterError(f"n_max must lie in [1, {MAX_BLOCK}], got {n_max}")
    if n_max * np.log(k_cells) > np.log(WORD_LIMIT) + 1e-12:
        raise ParameterError(f"k_cells**n_max = {k_cells}**{n_max} exceeds the 2**24 word limit")
    if n_omega < 1 or samples < 1:
        raise ParameterError("n_omega and samples must be positive")
    seeds = seeds or SeedPolicy(0)
    lengths = block_lengths(n_max)

    logger.info(
        f"Estimating block entropy: {system.describe()}, k={k_cells}, n_max={n_max}, "
        f"n_omega={n_omega}, samples={samples}"
    )
    per_omega = np.empty((n_omega, len(lengths)))
    for w in range(n_omega):
        rng = seeds.generator(w, label='entropy')
        x = _draw_points(source, samples, rng)
        draws = system.kernel.sample(rng, n_max)
        words = np.zeros(samples, dtype=np.int64)
        column = 0
        for j in range(n_max):
            words = words * k_cells + _symbols(x, k_cells)
            n = j + 1
            if n in lengths:
                _, counts = np.unique(words, return_counts=True)
                per_omega[w, column] = entropy_miller_madow(counts) / n
                column += 1
            x = system.step_raw(x, draws[j])

    h_values = per_omega.mean(axis=0)
    if n_omega > 1:
        std_errors = per_omega.std(axis=0, ddof=1) / np.sqrt(n_omega)
    else:
        std_errors = np.zeros(len(lengths))
    undersampled = tuple(n for n in lengths if samples < 10 * k_cells ** n)
    if undersampled:
        logger.warning(f"Block entropy undersampled at n={list(undersampled)} ({samples} samples, k={k_cells})")

    return EntropyEstimate(
        partition_size=int(k_cells),
        block_lengths=lengths,
        h_values=tuple(float(h) for h in h_values),
        std_errors=tuple(float(s) for s in std_errors),
        samples_per_block=int(samples),
        n_omega=int(n_omega),
        undersampled_blocks=undersampled,
    )


def pesin_rhs(system, mu, quad_order=8):
    """
    Integral of log f_t'(x) against mu(dx) theta(dt)

    Cells contribute at their midpoints; the kernel is integrated by
    Gauss-Legendre quadrature. In additive mode the derivative does not
    depend on t and this is the integral of log T' against mu.
    """
    centers = cell_centers(mu.n_cells)
    if system.mode is Mode.ADDITIVE:
        log_d = np.log(system.base_map.derivative_raw(centers))
        return float(np.dot(mu.weights, log_d))
    nodes, weights = system.kernel.quadrature(quad_order)
    weights = weights / weights.sum()
    log_d = np.log(saddle_branch_derivative(system.alpha, nodes[:, None], centers[None, :]))
    return float(weights @ log_d @ mu.weights)


@dataclass(frozen=True)
class PesinResidual:
    residual: float
    entropy: float
    integral: float
    flagged: bool


def pesin_residual(system, mu, entropy):
    """|best H_n/n - pesin_rhs|, flagged when the entropy was undersampled"""
    integral = pesin_rhs(system, mu)
    result = PesinResidual(
        residual=abs(entropy.best - integral),
        entropy=entropy.best,
        integral=integral,
        flagged=entropy.undersampled,
    )
    logger.info(f"Pesin residual {result.residual:.6f} (entropy {result.entropy:.6f}, integral {result.integral:.6f})")
    return result


@dataclass(frozen=True)
class DistortionReport:
    interval: Arc
    depth: int
    C: float
    r: float


def _distortion_along(system, sequence, interval, k, r, grid):
    xs = wrap(interval.start + interval.length * np.linspace(0.0, 1.0, grid))
    log_d = np.zeros(grid)
    spread = 0.0
    start, length = interval.start, interval.length
    slack = 1e-15
    for j in range(k):
        if start < r - slack or start + length > 1.0 - r + slack:
            raise HypothesisError(
                f"Image {j} = [{start}, {start + length}] leaves [{r}, {1.0 - r}]", step=j
            )
        t = sequence[j]
        log_d += np.log(system.derivative_raw(xs, t))
        xs = system.step_raw(xs, t)
        spread = max(spread, float(log_d.max() - log_d.min()))
        la = system.lift_raw(np.float64(start), t)
        lb = system.lift_raw(np.float64(start + length), t)
        start, length = float(wrap(la)), float(lb - la)
        if length >= 1.0:
            raise HypothesisError(f"Image {j + 1} covers the circle", step=j + 1)
    return float(np.exp(spread))


def distortion_constant(system, params, interval, k, r=None, grid=257, seed=0):
    """
    Distortion of f_{t_k} o ... o f_{t_1} on an arc

    C = max over grid points x, y of D(x)/D(y), D the derivative product.
    With an ExpansionBand the maximum is also taken over the constant
    sequences s, u and one seeded uniform sequence in [s, u]; r then
    defaults to p_u / 2.

    Args:
        system: RandomSystem supplying lift and derivative
        params: Sequence of k parameters, or an ExpansionBand
        interval: Arc I
        k: Depth
        r: Images f^j(I), j < k, must stay in [r, 1 - r]
        grid: Grid points in I

    Raises:
        HypothesisError: an image leaves [r, 1 - r]; carries the step
    """
    if k < 0:
        raise ParameterError(f"depth must be >= 0, got {k}")
    if isinstance(params, ExpansionBand):
        band = params
        rng = SeedPolicy(seed).generator(0, label='distortion')
        sequences = [
            np.full(k, band.s),
            np.full(k, band.u),
            band.s + (band.u - band.s) * rng.random(k),
        ]
        r = band.p_u / 2.0 if r is None else r
    else:
        sequence = np.asarray(params, dtype=np.float64).ravel()
        if sequence.size < k:
            raise ParameterError(f"Need {k} parameters, got {sequence.size}")
        sequences = [sequence[:k]]
        r = 0.0 if r is None else r
    if not 0.0 <= r < 0.5:
        raise ParameterError(f"r must lie in [0, 1/2), got {r}")

    C = max(_distortion_along(system, seq, interval, k, r, grid) for seq in sequences) if k else 1.0
    return DistortionReport(interval=interval, depth=int(k), C=C, r=float(r))


@dataclass(frozen=True)
class GapReport:
    delta0: float
    rho0: float
    beta: float
    argmin: dict = field(default_factory=dict)


def expansion_gap(system, delta0, rho0, grid=1024, d_points=256, t_points=17):
    """
    Smallest growth d(f_t x, f_t y) - d(x, y) for d(x, y) in [delta0, rho0]

    Pairs with y inside B(0, delta0) are excluded. The image distance is the
    circle distance between f_t(x) and f_t(y): an image arc longer than 1/2
    is measured the short way round. Additive systems translate rigidly in
    t, so one t suffices.

    Returns:
        GapReport with the minimiser (t, x, y)
    """
    if not 0.0 < delta0 < rho0 <= 0.25:
        raise ParameterError(f"Need 0 < delta0 < rho0 <= 1/4, got delta0={delta0}, rho0={rho0}")
    kernel = system.kernel
    if system.mode is Mode.ADDITIVE or kernel.is_point:
        ts = np.array([kernel.center])
    else:
        ts = np.linspace(kernel.support_lo, kernel.support_hi, t_points)

    xs = np.arange(grid) / grid
    ds = np.linspace(delta0, rho0, d_points)
    best, argmin = np.inf, {}
    for t in ts:
        for sign in (1.0, -1.0):
            y = wrap(xs[:, None] + sign * ds[None, :])
            valid = circle_distance(y, 0.0) >= delta0 - 1e-15
            if not np.any(valid):
                continue
            start = xs[:, None] if sign > 0 else y
            image = system.lift_raw(start + ds[None, :], t) - system.lift_raw(start, t)
            gap = np.where(valid, circle_distance(image, 0.0) - ds[None, :], np.inf)
            i, j = np.unravel_index(np.argmin(gap), gap.shape)
            if gap[i, j] < best:
                best = float(gap[i, j])
                argmin = {'t': float(t), 'x': float(xs[i]), 'y': float(y[i, j])}

    if not np.isfinite(best):
        raise ParameterError("Expansion gap constraint set is empty")
    logger.info(f"Expansion gap beta={best:.6g} for delta0={delta0}, rho0={rho0}")
    return GapReport(delta0=float(delta0), rho0=float(rho0), beta=best, argmin=argmin)


def _longest_run(labels):
    """Longest circular run of equal labels, in grid points"""
    change = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    bounds = np.concatenate(([0], change, [labels.size]))
    runs = np.diff(bounds)
    if runs.size > 1 and labels[0] == labels[-1]:
        # the arc through 0 is one piece
        runs = np.concatenate(([runs[0] + runs[-1]], runs[1:-1]))
    return int(runs.max())


def partition_diameter(system, seed, k_cells=2, n=8, grid_exponent=GRID_EXPONENT):
    """
    Largest atom piece of the itinerary partition after n steps

    2**grid_exponent grid points are coded by their first n+1 symbols
    along one seeded parameter sequence; an atom piece is a maximal run of
    consecutive grid points (around the circle) with the same code. The
    draws at depth n+1 extend those at depth n, so the result never grows
    with n.

    Every atom of the partition by arcs is a union of arcs. While the maps
    stay monotone on each cell the atoms are single arcs and the largest
    piece is the largest atom diameter; otherwise it is a lower bound.

    Returns:
        Largest piece length, a multiple of the grid spacing
    """
    if not 0 <= n <= MAX_BLOCK:
        raise ParameterError(f"n must lie in [0, {MAX_BLOCK}], got {n}")
    if k_cells < 2:
        raise ParameterError(f"k_cells must be >= 2, got {k_cells}")
    points = 2 ** grid_exponent
    x = (np.arange(points) + 0.5) / points
    labels = _symbols(x, k_cells)
    draws = system.kernel.sample(SeedPolicy(seed).generator(0, label='partition'), max(n, 1))
    for j in range(n):
        x = system.step_raw(x, draws[j])
        _, labels = np.unique(labels * k_cells + _symbols(x, k_cells), return_inverse=True)
        labels = labels.ravel()
    return _longest_run(labels) / points


@dataclass(frozen=True)
class BandConstants:
    beta1: float
    beta2: float
    gamma: float = None


def band_constants(alpha, band, r, C=None, grid=513, t_points=65):
    """
    Expansion constants of the saddle-node band

    beta1 = min f_t' on [r, 1 - r], beta2 = max f_t' on the circle, both over
    t in [s, u]; with a distortion constant C also the per-round contraction
    gamma = 1 - C (p_u - r) / (beta2 (1 - 2r)).
    """
    if not 0.0 < r < band.p_u:
        raise ParameterError(f"r must lie in (0, p_u={band.p_u}), got {r}")
    ts = np.linspace(band.s, band.u, t_points)[:, None]
    inner = np.linspace(r, 1.0 - r, grid)[None, :]
    circle = np.append(np.arange(grid) / grid, 0.5)[None, :]
    beta1 = float(saddle_branch_derivative(alpha, ts, inner).min())
    beta2 = float(saddle_branch_derivative(alpha, ts, circle).max())
    gamma = None
    if C is not None:
        gamma = 1.0 - C * (band.p_u - r) / (beta2 * (1.0 - 2.0 * r))
    return BandConstants(beta1=beta1, beta2=beta2, gamma=gamma)


@dataclass(frozen=True)
class SemicontinuityTable:
    alpha: float
    rokhlin: float
    rows: tuple
    verdict: Verdict


def semicontinuity_table(alpha, eps_ladder, cells=1024, k_cells=2, n_max=8, n_omega=8, samples=DEFAULT_SAMPLES,
                         seeds=None, tol=1e-10, max_iter=10 ** 6):
    """
    Random entropy across decreasing eps next to the eps = 0 Rokhlin value

    The Rokhlin value is the integral of log T' against the deterministic
    Ulam density. The table passes when the estimate at the smallest eps
    does not exceed that value by more than two standard errors; it is
    flagged when any estimate was undersampled.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"The Rokhlin reference needs alpha in (0, 1), got {alpha}")
    if len(eps_ladder) == 0:
        raise ParameterError("eps_ladder is empty")
    seeds = seeds or SeedPolicy(0)
    mu_srb = stationary(assemble_deterministic(IntermittentMap(alpha), cells), tol=tol, max_iter=max_iter, n_starts=1)
    rokhlin = pesin_rhs(RandomSystem(Mode.ADDITIVE, point_kernel(0.0), alpha), mu_srb)

    rows = []
    for eps in eps_ladder:
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(eps), alpha)
        mu = stationary(assemble_annealed(system, cells), tol=tol, max_iter=max_iter, n_starts=1)
        estimate = block_entropy(system, mu, k_cells, n_max, n_omega, samples, seeds)
        rows.append({
            'eps': float(eps),
            'entropy': estimate.best,
            'std_error': estimate.best_std_error,
            'pesin_rhs': pesin_rhs(system, mu),
            'undersampled': estimate.undersampled,
        })

    last = rows[-1]
    if last['entropy'] > rokhlin + 2.0 * last['std_error']:
        verdict = Verdict.FAIL
    elif any(row['undersampled'] for row in rows):
        verdict = Verdict.FLAGGED
    else:
        verdict = Verdict.PASS
    logger.info(f"Semicontinuity table: rokhlin={rokhlin:.6f}, last entropy={last['entropy']:.6f}, verdict={verdict.value}")
    return SemicontinuityTable(alpha=float(alpha), rokhlin=rokhlin, rows=tuple(rows), verdict=verdict)
