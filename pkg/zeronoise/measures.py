"""
Measures on the circle and the distances used to compare them
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import ot
from scipy.optimize import minimize_scalar

from .exceptions import InputError, ParameterError
from .transfer import GridMeasure
from .utils import as_points, cell_centers, format_float, wrap

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.05
DEFAULT_T_GRID = 101
DENSITY_COLUMNS = ('cell_index', 'cell_left', 'weight', 'density')


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Uniformly weighted sample cloud on the circle"""

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = as_points(self.samples, 'samples').ravel()
        if x.size == 0:
            raise InputError("EmpiricalMeasure needs at least one sample")
        x = wrap(x)
        x.setflags(write=False)
        object.__setattr__(self, 'samples', x)

    @property
    def size(self):
        return self.samples.size

    def counts(self, n_cells):
        """Histogram counts on the standard cells; sums to the sample count"""
        idx = np.minimum(np.floor(self.samples * n_cells).astype(np.int64), n_cells - 1)
        return np.bincount(idx, minlength=n_cells)


@dataclass(frozen=True)
class MixtureEstimate:
    t_weight: float
    distance: float


def dirac_zero(n_cells):
    """Grid version of the Dirac mass at 0: all weight on cell [0, 1/N)"""
    w = np.zeros(n_cells)
    w[0] = 1.0
    return GridMeasure(w)


def uniform_grid(n_cells):
    return GridMeasure(np.full(n_cells, 1.0 / n_cells))


def mixture(t, a, b):
    """t * a + (1 - t) * b on a common grid"""
    if a.n_cells != b.n_cells:
        raise InputError(f"Cannot mix grids of {a.n_cells} and {b.n_cells} cells")
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"Mixture weight must lie in [0, 1], got {t}")
    w = t * a.weights + (1.0 - t) * b.weights
    return GridMeasure(w / w.sum())


def grid_from_samples(samples, n_cells):
    """Normalized histogram of an empirical measure on the standard cells"""
    if not isinstance(samples, EmpiricalMeasure):
        samples = EmpiricalMeasure(samples)
    counts = samples.counts(n_cells)
    return GridMeasure(counts / counts.sum())


def _atoms(mu):
    if isinstance(mu, GridMeasure):
        positive = mu.weights > 0.0
        values, weights = cell_centers(mu.n_cells)[positive], mu.weights[positive]
    elif isinstance(mu, EmpiricalMeasure):
        values, weights = mu.samples, np.full(mu.size, 1.0 / mu.size)
    else:
        raise InputError(f"Unsupported measure type {type(mu).__name__}")
    # The solver integrates from the smallest atom; a zero-weight atom at 0
    # makes that the whole circle.
    return np.concatenate(([0.0], values)), np.concatenate(([0.0], weights))


def w1_circle(mu, nu):
    """
    Wasserstein-1 distance on the circle of circumference 1

    Grid measures are atoms at cell centres. A grid measure paired with an
    empirical one is compared after binning the samples onto that grid.
    The transport itself is POT's circle solver (level-median shift of the
    CDF difference).

    Returns:
        float in [0, 1/2]
    """
    if isinstance(mu, GridMeasure) and isinstance(nu, EmpiricalMeasure):
        nu = grid_from_samples(nu, mu.n_cells)
    elif isinstance(mu, EmpiricalMeasure) and isinstance(nu, GridMeasure):
        mu = grid_from_samples(mu, nu.n_cells)

    u_values, u_weights = _atoms(mu)
    v_values, v_weights = _atoms(nu)
    distance = ot.wasserstein_circle(u_values, v_values, u_weights=u_weights, v_weights=v_weights, p=1)
    return float(np.asarray(distance).ravel()[0])


def tv_grid(mu, nu):
    """Total variation distance (1/2) sum |mu_i - nu_i|"""
    if mu.n_cells != nu.n_cells:
        raise InputError(f"Dimension mismatch: {mu.n_cells} vs {nu.n_cells} cells")
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def mass_near_zero(mu, delta=DEFAULT_DELTA):
    """
    Mass of the arc [1 - delta, 1) U [0, delta)

    Grid cells straddling the arc boundary count in proportion to their
    overlap.
    """
    if not 0.0 < delta <= 0.5:
        raise ParameterError(f"delta must lie in (0, 1/2], got {delta}")
    if isinstance(mu, EmpiricalMeasure):
        x = mu.samples
        return float(np.mean((x < delta) | (x >= 1.0 - delta)))
    if not isinstance(mu, GridMeasure):
        raise InputError(f"Unsupported measure type {type(mu).__name__}")

    n = mu.n_cells
    left = np.arange(n) / n
    right = np.arange(1, n + 1) / n
    near = np.clip(np.minimum(right, delta) - left, 0.0, None)
    far = np.clip(right - np.maximum(left, 1.0 - delta), 0.0, None)
    coverage = np.minimum((near + far) * n, 1.0)
    return float(np.dot(mu.weights, coverage))


def distance_to_E(mu, mu_srb, t_grid=DEFAULT_T_GRID):
    """
    Closest member of {t delta_0 + (1 - t) mu_srb : t in [0, 1]} in W1

    Scans t on a uniform grid, then refines with a bounded Brent search on
    the two grid intervals around the best point.

    Args:
        mu: GridMeasure or EmpiricalMeasure
        mu_srb: GridMeasure fixing the grid
        t_grid: Number of scan points (>= 11)

    Returns:
        MixtureEstimate
    """
    if t_grid < 11:
        raise ParameterError(f"t_grid must be >= 11, got {t_grid}")
    n = mu_srb.n_cells
    if isinstance(mu, EmpiricalMeasure):
        mu = grid_from_samples(mu, n)
    if mu.n_cells != n:
        raise InputError(f"Measures live on different grids: {mu.n_cells} vs {n} cells")

    dirac = dirac_zero(n)

    def objective(t):
        return w1_circle(mu, mixture(float(np.clip(t, 0.0, 1.0)), dirac, mu_srb))

    ts = np.linspace(0.0, 1.0, t_grid)
    values = np.array([objective(t) for t in ts])
    best = int(np.argmin(values))
    t_best, d_best = float(ts[best]), float(values[best])

    lo, hi = ts[max(best - 1, 0)], ts[min(best + 1, t_grid - 1)]
    refined = minimize_scalar(objective, bounds=(lo, hi), method='bounded', options={'xatol': 1e-8})
    if refined.success and refined.fun < d_best:
        t_best, d_best = float(refined.x), float(refined.fun)

    return MixtureEstimate(t_weight=t_best, distance=d_best)


def write_density_csv(mu, path_or_stream):
    """Write cell_index,cell_left,weight,density rows with 17 significant digits"""
    n = mu.n_cells

    def _write(stream):
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(DENSITY_COLUMNS)
        for i, w in enumerate(mu.weights):
            writer.writerow([i, format_float(i / n), format_float(float(w)), format_float(float(w) * n)])

    if hasattr(path_or_stream, 'write'):
        _write(path_or_stream)
    else:
        with open(path_or_stream, 'w', newline='', encoding='utf-8') as f:
            _write(f)


def read_density_csv(path):
    """
    Read a density CSV back into a GridMeasure

    Raises:
        InputError: missing columns, gaps in cell_index, or bad numbers
    """
    try:
        with open(path, newline='', encoding='utf-8') as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or 'weight' not in reader.fieldnames:
                raise InputError(f"{path}: missing 'weight' column")
            rows = list(reader)
    except OSError as e:
        raise InputError(f"Cannot read density file {path}: {e}")

    try:
        index = [int(r['cell_index']) for r in rows]
        weights = np.array([float(r['weight']) for r in rows])
    except (KeyError, ValueError) as e:
        raise InputError(f"{path}: malformed row ({e})")
    if index != list(range(len(rows))):
        raise InputError(f"{path}: cell_index must run 0..N-1 in order")
    return GridMeasure(weights / weights.sum())
