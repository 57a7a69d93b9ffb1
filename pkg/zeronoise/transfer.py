"""
Ulam discretization of annealed and deterministic transfer operators

Cells are I_j = [j/N, (j+1)/N); cell 0 starts at the indifferent point.
An UlamMatrix stores P[i, j], the probability that a point spread uniformly
over I_i lands in I_j after one step, as a scipy.sparse CSR matrix.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .dynamics import CircleMap, IntermittentMap, inverse_lift, saddle_affine_parts
from .exceptions import AssemblyError, InputError, NonConvergenceError, ParameterError
from .perturbation import Mode

logger = logging.getLogger(__name__)

MIN_CELLS = 8
RENORMALIZE_DEFECT = 1e-12
MAX_ROW_DEFECT = 1e-6
BLOCK_ENTRIES = 1 << 20
CHECK_EVERY = 10

DEFAULT_CELLS = 4096
DEFAULT_QUAD_ORDER = 5
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10 ** 6
DEFAULT_N_STARTS = 3


@dataclass(frozen=True, eq=False)
class UlamMatrix:
    n_cells: int
    matrix: sparse.csr_matrix = field(repr=False)
    renormalized: bool = False
    description: dict = field(default_factory=dict, compare=False)

    def row(self, i):
        """Row records of cell i as (column indices, weights)"""
        start, stop = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[start:stop].copy(), self.matrix.data[start:stop].copy()

    def row_sums(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """
    Probability weights on the N standard cells

    residual and multiplicity are filled in by `stationary`.
    """

    weights: np.ndarray = field(repr=False)
    residual: float = None
    multiplicity: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise InputError("GridMeasure needs at least one cell")
        if not np.all(np.isfinite(w)) or w.min() < -1e-15:
            raise InputError("GridMeasure weights must be finite and nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-9:
            raise InputError(f"GridMeasure weights must sum to 1, got {total!r}")
        w = np.clip(w, 0.0, None)
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)

    @property
    def n_cells(self):
        return self.weights.size

    @property
    def density(self):
        return self.weights * self.n_cells


def _finalize(rows, cols, data, n_cells, description):
    matrix = sparse.coo_matrix((data, (rows, cols)), shape=(n_cells, n_cells)).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()

    sums = np.asarray(matrix.sum(axis=1)).ravel()
    defect = float(np.max(np.abs(sums - 1.0)))
    renormalized = False
    if defect > MAX_ROW_DEFECT:
        worst = int(np.argmax(np.abs(sums - 1.0)))
        raise AssemblyError(f"Row {worst} has mass {sums[worst]!r} (defect {defect:.3e})")
    if defect > RENORMALIZE_DEFECT:
        logger.warning(f"Renormalizing Ulam rows: max defect {defect:.3e}")
        matrix = sparse.diags(1.0 / sums) @ matrix
        matrix = matrix.tocsr()
        renormalized = True

    return UlamMatrix(n_cells=n_cells, matrix=matrix, renormalized=renormalized, description=description)


def _check_cells(n_cells):
    if int(n_cells) != n_cells or n_cells < MIN_CELLS:
        raise ParameterError(f"n_cells must be an integer >= {MIN_CELLS}, got {n_cells}")
    return int(n_cells)


def _cell_masses(kernel, lower, upper):
    return np.abs(kernel.cdf(upper) - kernel.cdf(lower))


def assemble_annealed(system, n_cells=DEFAULT_CELLS, quad_order=DEFAULT_QUAD_ORDER):
    """
    Ulam matrix of the annealed chain x -> T_t(x), t ~ kernel

    Each row averages, over Gauss-Legendre nodes x in I_i, the kernel mass of
    {t : T_t(x) in I_j}. That mass is an exact CDF difference: in additive
    mode the window is [T(x) + lo, T(x) + hi]; in parametric mode
    f_t(x) = t a(x) + b(x), so the cell edges pull back to t-values through
    one affine map. Columns wrap modulo N through the lift.

    Args:
        system: RandomSystem with a non-point kernel
        n_cells: Number of cells N
        quad_order: Gauss-Legendre nodes per cell

    Returns:
        UlamMatrix

    Raises:
        AssemblyError: a row misses unit mass by more than 1e-6
    """
    n = _check_cells(n_cells)
    kernel = system.kernel
    if kernel.is_point:
        raise ParameterError("Annealed assembly needs a kernel with a density; use assemble_deterministic")
    if quad_order < 1:
        raise ParameterError(f"quad_order must be >= 1, got {quad_order}")

    logger.info(
        f"Assembling annealed Ulam matrix: mode={system.mode.value}, alpha={system.alpha}, "
        f"noise={kernel.describe()}, cells={n}, quad_order={quad_order}"
    )

    nodes, qweights = np.polynomial.legendre.leggauss(quad_order)
    offsets = 0.5 * (nodes + 1.0)
    qweights = 0.5 * qweights

    # Widest window in cells over any row, used to size blocks.
    if system.mode is Mode.ADDITIVE:
        window = kernel.width
    else:
        window = kernel.width * 2.0
    span_estimate = int(np.ceil(window * n)) + 2
    block = max(1, BLOCK_ENTRIES // (quad_order * span_estimate))

    rows_out, cols_out, data_out = [], [], []
    for first in range(0, n, block):
        cells = np.arange(first, min(first + block, n))
        x = (cells[:, None] + offsets[None, :]) / n

        if system.mode is Mode.ADDITIVE:
            center = system.base_map.lift_raw(x)
            k_lo = np.floor((center + kernel.support_lo) * n).astype(np.int64)
            k_hi = np.floor((center + kernel.support_hi) * n).astype(np.int64)
            span = int(np.max(k_hi - k_lo)) + 1
            ks = k_lo[..., None] + np.arange(span)
            mass = _cell_masses(kernel, ks / n - center[..., None], (ks + 1) / n - center[..., None])
        else:
            a, b = saddle_affine_parts(system.alpha, x)
            y_lo = a * kernel.support_lo + b
            y_hi = a * kernel.support_hi + b
            k_lo = np.floor(np.minimum(y_lo, y_hi) * n).astype(np.int64)
            k_hi = np.floor(np.maximum(y_lo, y_hi) * n).astype(np.int64)
            span = int(np.max(k_hi - k_lo)) + 1
            ks = k_lo[..., None] + np.arange(span)

            flat = np.abs(a) < 1e-300
            safe_a = np.where(flat, 1.0, a)[..., None]
            t_left = (ks / n - b[..., None]) / safe_a
            t_right = ((ks + 1) / n - b[..., None]) / safe_a
            mass = _cell_masses(kernel, t_left, t_right)
            # a(x) = 0: the whole kernel maps to the single point b(x)
            point_cell = np.floor(b * n).astype(np.int64)[..., None]
            mass = np.where(flat[..., None], (ks == point_cell).astype(np.float64), mass)

        data = mass * qweights[None, :, None]
        rows = np.broadcast_to(cells[:, None, None], data.shape)
        cols = np.mod(ks, n)
        keep = data > 0.0
        rows_out.append(rows[keep])
        cols_out.append(cols[keep])
        data_out.append(data[keep])

    description = {'assembly': 'annealed', 'cells': n, 'quad_order': quad_order}
    description.update(system.describe())
    matrix = _finalize(
        np.concatenate(rows_out), np.concatenate(cols_out), np.concatenate(data_out), n, description
    )
    logger.info(f"Annealed Ulam matrix ready: nnz={matrix.matrix.nnz}, renormalized={matrix.renormalized}")
    return matrix


def assemble_deterministic(circle_map, n_cells=DEFAULT_CELLS):
    """
    Ulam matrix of a deterministic monotone circle map

    P[i, j] = |I_i intersect T^-1 I_j| / |I_i|. The preimages of the lifted
    grid k/N, k = 0..degree*N, come from bisection on the lift; merging them
    with the cell edges gives pieces that each lie in one source cell and
    map into one target cell.

    Args:
        circle_map: CircleMap (degree 1 or 2)
        n_cells: Number of cells N

    Returns:
        UlamMatrix
    """
    if not isinstance(circle_map, CircleMap):
        raise ParameterError(f"Expected a circle map, got {type(circle_map).__name__}")
    n = _check_cells(n_cells)
    logger.info(f"Assembling deterministic Ulam matrix: map={circle_map!r}, cells={n}")

    levels = np.arange(circle_map.degree * n + 1) / n
    preimages = np.asarray(inverse_lift(circle_map, levels), dtype=np.float64)
    preimages[0], preimages[-1] = 0.0, 1.0
    preimages = np.maximum.accumulate(preimages)

    breaks = np.union1d(preimages, np.arange(n + 1) / n)
    lengths = np.diff(breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    keep = lengths > 0.0
    lengths, mids = lengths[keep], mids[keep]

    rows = np.minimum(np.floor(mids * n).astype(np.int64), n - 1)
    segment = np.searchsorted(preimages, mids, side='right') - 1
    cols = np.mod(segment, n)

    description = {'assembly': 'deterministic', 'cells': n, 'map': type(circle_map).__name__}
    if hasattr(circle_map, 'alpha'):
        description['alpha'] = circle_map.alpha
    return _finalize(rows, cols, lengths * n, n, description)


def _start_vectors(n, n_starts, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    starts = [np.full(n, 1.0 / n)]
    if n_starts > 1:
        ramp = np.arange(1, n + 1, dtype=np.float64)
        starts.append(ramp / ramp.sum())
    while len(starts) < n_starts:
        v = rng.random(n)
        starts.append(v / v.sum())
    return starts[:n_starts]


def _power_iterate(transposed, v, tol, max_iter):
    # Lazy chain v -> (v + vP)/2: same fixed vectors, always aperiodic.
    residual = np.inf
    iterations = 0
    while iterations < max_iter:
        for _ in range(CHECK_EVERY):
            v = 0.5 * (v + transposed @ v)
        iterations += CHECK_EVERY
        v = v / v.sum()
        residual = float(np.abs(transposed @ v - v).sum())
        if residual <= tol:
            break
    return v, residual, iterations


def stationary(P, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, n_starts=DEFAULT_N_STARTS, seed=0):
    """
    Fixed vector of an Ulam matrix by multi-start power iteration

    Each start is iterated until ||mu P - mu||_1 <= tol. Runs that disagree by
    more than 10 * tol in l1 set the multiplicity flag on the result.

    Args:
        P: UlamMatrix
        tol: l1 invariance residual to reach
        max_iter: Iteration cap per start
        n_starts: Number of distinct initial vectors
        seed: Seed for the random starts beyond uniform and ramp

    Returns:
        GridMeasure from the uniform start, with residual and multiplicity set

    Raises:
        NonConvergenceError: a start did not reach tol within max_iter
    """
    if n_starts < 1:
        raise ParameterError(f"n_starts must be >= 1, got {n_starts}")
    transposed = P.matrix.T.tocsr()
    results = []
    for index, v0 in enumerate(_start_vectors(P.n_cells, n_starts, seed)):
        v, residual, iterations = _power_iterate(transposed, v0, tol, max_iter)
        if residual > tol:
            logger.error(f"Power iteration stalled: start={index}, residual={residual:.3e}, iterations={iterations}")
            raise NonConvergenceError(
                f"Power iteration did not reach tol={tol} within {max_iter} iterations (residual {residual:.3e})",
                residual=residual,
                iterations=iterations,
            )
        logger.info(f"Stationary start {index}: residual={residual:.3e} after {iterations} iterations")
        results.append((v, residual))

    reference, residual = results[0]
    spread = max((float(np.abs(v - reference).sum()) for v, _ in results[1:]), default=0.0)
    multiplicity = spread > 10.0 * tol
    if multiplicity:
        logger.warning(f"Stationary vectors disagree across starts: l1 spread {spread:.3e} > {10.0 * tol:.1e}")

    return GridMeasure(reference, residual=residual, multiplicity=multiplicity)


def push(P, mu):
    """Push a grid measure forward one step: nu = mu P"""
    if P.n_cells != mu.n_cells:
        raise InputError(f"Dimension mismatch: matrix has {P.n_cells} cells, measure has {mu.n_cells}")
    nu = P.matrix.T @ mu.weights
    return GridMeasure(nu)


def ulam_density_rows(mu):
    """Rows (cell_index, cell_left, weight, density) for the density CSV"""
    n = mu.n_cells
    return [
        (i, i / n, float(w), float(w) * n)
        for i, w in enumerate(mu.weights)
    ]


def invariance_residual(P, mu):
    return float(np.abs(P.matrix.T @ mu.weights - mu.weights).sum())


def deterministic_mass_trend(alpha, cell_counts, delta=0.05, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """
    Mass near 0 of the deterministic Ulam vector of T for growing N

    For alpha >= 1 the only physical measure is the Dirac mass at 0 and the
    Ulam vectors pile up at cell 0 as N grows.

    Returns:
        List of (n_cells, mass_near_zero) pairs in the order given
    """
    from .measures import mass_near_zero

    circle_map = IntermittentMap(alpha)
    trend = []
    for n in cell_counts:
        mu = stationary(assemble_deterministic(circle_map, n), tol=tol, max_iter=max_iter, n_starts=1)
        trend.append((int(n), mass_near_zero(mu, delta)))
        logger.info(f"Deterministic Ulam trend: alpha={alpha}, cells={n}, mass_near_zero={trend[-1][1]:.6f}")
    return trend
