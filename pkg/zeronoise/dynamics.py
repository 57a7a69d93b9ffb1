"""
Circle maps with an indifferent fixed point at 0

The circle is [0, 1) with 0 ~ 1. Every map here is a monotone degree-d
circle map described by its lift L: [0, 1) -> [0, d), extended to the reals
by L(x + m) = L(x) + d*m. Images are computed in the lift and reduced
modulo 1 once, so arc lengths never pick up wrap error.

Families:
    IntermittentMap   T(x) = x + 2^a x^(1+a) on [0, 1/2), mirrored on [1/2, 1)
    SaddleNodeMap     f_t(x) = t x + 2^a (2 - t) x^(1+a), mirrored; f_1 = T
    DoublingMap       x -> 2x, used as an exact reference
    IdentityMap       x -> x, used as an exact reference

x = 1/2 belongs to the second branch.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleError, InputError, InversionError, ParameterError
from .utils import as_points, unwrap_scalar, wrap

logger = logging.getLogger(__name__)

BRANCH_POINT = 0.5
BAND_GRID = 2048
BAND_MARGIN = 1e-6
BAND_MIN_WIDTH = 1e-9


def circle_point(x):
    """Normalize a real to a point of [0, 1)"""
    return float(wrap(as_points(x)))


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")


def _check_t(t):
    t_arr = np.asarray(t, dtype=np.float64)
    if not np.all((t_arr > 0.0) & (t_arr <= 1.0)):
        raise ParameterError(f"t must lie in (0, 1], got {t}")


# Branch formulas on [0, 1). Both branches are evaluated everywhere and
# selected with np.where; the unused branch stays finite on [0, 1).

def _intermittent_branch_lift(alpha, x):
    y = x * (2.0 * x) ** alpha
    z = (1.0 - x) * (2.0 * (1.0 - x)) ** alpha
    return np.where(x < BRANCH_POINT, x + y, 1.0 + x - z)


def _intermittent_branch_derivative(alpha, x):
    left = 1.0 + (1.0 + alpha) * (2.0 * x) ** alpha
    right = 1.0 + (1.0 + alpha) * (2.0 * (1.0 - x)) ** alpha
    return np.where(x < BRANCH_POINT, left, right)


def saddle_branch_lift(alpha, t, x):
    """
    Lift of f_t on [0, 1), broadcasting over t and x

    Args:
        alpha: Tangency order
        t: Parameter(s) in (0, 1]
        x: Points in [0, 1)

    Returns:
        Lifted images in [0, 2)
    """
    y = x * (2.0 * x) ** alpha
    z = (1.0 - x) * (2.0 * (1.0 - x)) ** alpha
    first = t * x + (2.0 - t) * y
    second = 2.0 - t * (1.0 - x) - (2.0 - t) * z
    return np.where(x < BRANCH_POINT, first, second)


def saddle_branch_derivative(alpha, t, x):
    """Derivative of f_t on [0, 1), broadcasting over t and x"""
    left = t + (2.0 - t) * (1.0 + alpha) * (2.0 * x) ** alpha
    right = t + (2.0 - t) * (1.0 + alpha) * (2.0 * (1.0 - x)) ** alpha
    return np.where(x < BRANCH_POINT, left, right)


def saddle_affine_parts(alpha, x):
    """
    Split the lift of f_t(x) as t * a(x) + b(x)

    f_t(x) is affine in t, so the pushforward of a parameter law through
    t -> f_t(x) is a rescaled copy of that law. a(x) vanishes at 0 and 1/2.

    Returns:
        Tuple (a, b) of arrays shaped like x
    """
    y = x * (2.0 * x) ** alpha
    z = (1.0 - x) * (2.0 * (1.0 - x)) ** alpha
    left = x < BRANCH_POINT
    a = np.where(left, x - y, z - (1.0 - x))
    b = np.where(left, 2.0 * y, 2.0 - 2.0 * z)
    return a, b


class CircleMap:
    """
    Monotone circle map given by a lift of [0, 1) onto [0, degree)

    Subclasses implement `_branch_lift` and `_branch_derivative` on [0, 1).
    """

    degree = 2

    def _branch_lift(self, x):
        raise NotImplementedError

    def _branch_derivative(self, x):
        raise NotImplementedError

    def lift_raw(self, x):
        """Extended lift without input validation (array in, array out)"""
        m = np.floor(x)
        return self._branch_lift(x - m) + self.degree * m

    def derivative_raw(self, x):
        return self._branch_derivative(wrap(x))

    def lift(self, x):
        return unwrap_scalar(self.lift_raw(as_points(x)))

    def image(self, x):
        return unwrap_scalar(wrap(self.lift_raw(as_points(x))))

    def derivative(self, x):
        return unwrap_scalar(self.derivative_raw(as_points(x)))

    def evaluate(self, x):
        """
        Image and derivative at x

        Returns:
            Tuple (image, derivative); floats for scalar input
        """
        x = as_points(x)
        return (
            unwrap_scalar(wrap(self.lift_raw(x))),
            unwrap_scalar(self.derivative_raw(x)),
        )


@dataclass(frozen=True)
class IntermittentMap(CircleMap):
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)

    def _branch_lift(self, x):
        return _intermittent_branch_lift(self.alpha, x)

    def _branch_derivative(self, x):
        return _intermittent_branch_derivative(self.alpha, x)


@dataclass(frozen=True)
class SaddleNodeMap(CircleMap):
    alpha: float
    t: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_t(self.t)

    def _branch_lift(self, x):
        return saddle_branch_lift(self.alpha, self.t, x)

    def _branch_derivative(self, x):
        return saddle_branch_derivative(self.alpha, self.t, x)


@dataclass(frozen=True)
class DoublingMap(CircleMap):
    def _branch_lift(self, x):
        return 2.0 * x

    def _branch_derivative(self, x):
        return np.full_like(x, 2.0, dtype=np.float64)


@dataclass(frozen=True)
class IdentityMap(CircleMap):
    degree = 1

    def _branch_lift(self, x):
        return np.array(x, dtype=np.float64, copy=True)

    def _branch_derivative(self, x):
        return np.ones_like(x, dtype=np.float64)


def lift(circle_map, x):
    return circle_map.lift(x)


def evaluate_intermittent(circle_map, x):
    """
    Evaluate the intermittent map T at x

    Args:
        circle_map: IntermittentMap
        x: Point(s) on the circle (any real, reduced modulo 1)

    Returns:
        Tuple (image, derivative)
    """
    return circle_map.evaluate(x)


def evaluate_saddle(circle_map, x):
    """Evaluate f_t at x; returns (image, derivative)"""
    return circle_map.evaluate(x)


def fixed_source(alpha, s):
    """
    Repelling fixed point p_s of f_s on (0, 1/2)

    p_s = (1/2) ((1 - s) / (2 - s))^(1/alpha), with f_s'(p_s) = 1 + alpha(1 - s).
    """
    _check_alpha(alpha)
    if not 0.0 < s < 1.0:
        raise ParameterError(f"s must lie in (0, 1), got {s}")
    return 0.5 * ((1.0 - s) / (2.0 - s)) ** (1.0 / alpha)


@dataclass(frozen=True)
class ExpansionBand:
    """
    Parameter band [s, u] on which every f_t expands on [p_u, p_s]

    min_derivative is the certified minimum of f_t' over the band.
    """

    alpha: float
    s: float
    u: float
    p_s: float
    p_u: float
    min_derivative: float

    @property
    def width(self):
        return self.u - self.s

    def contains_start(self, x):
        """Closed repeller belt [p_u, 1 - p_u]"""
        return self.p_u <= x <= 1.0 - self.p_u


def _analytic_band_minimum(alpha, s, u):
    # f_t'(x) increases in x on [0, 1/2) and is affine in t, so the minimum
    # over [s, u] x [p_u, p_s] sits at x = p_u with t = s or t = u.
    p_u = fixed_source(alpha, u)
    return float(min(
        saddle_branch_derivative(alpha, s, p_u),
        saddle_branch_derivative(alpha, u, p_u),
    ))


def _grid_band_minimum(alpha, s, u, grid):
    p_s = fixed_source(alpha, s)
    p_u = fixed_source(alpha, u)
    ts = np.linspace(s, u, grid)
    xs = np.linspace(p_u, p_s, grid)
    values = saddle_branch_derivative(alpha, ts[:, None], xs[None, :])
    return float(values.min())


def choose_expansion_band(alpha, s, grid=BAND_GRID, margin=BAND_MARGIN):
    """
    Pick u > s so that f_t' > 1 on [p_u, p_s] for all t in [s, u]

    Bisects for the largest u whose analytic minimum clears 1 + margin, takes
    the midpoint between s and that u, then re-verifies on a grid.

    Args:
        alpha: Tangency order
        s: Lower end of the band, in (0, 1)
        grid: Grid points per axis for the verification
        margin: Required clearance above 1

    Returns:
        ExpansionBand

    Raises:
        ParameterError: alpha or s out of range
        InfeasibleError: no u above s + 1e-9 is certified
    """
    _check_alpha(alpha)
    if not 0.0 < s < 1.0:
        raise ParameterError(f"s must lie in (0, 1), got {s}")

    threshold = 1.0 + margin
    if 1.0 + alpha * (1.0 - s) <= threshold:
        raise InfeasibleError(f"f_s'(p_s) does not clear 1 + {margin} at alpha={alpha}, s={s}")

    lo, hi = s, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _analytic_band_minimum(alpha, s, mid) > threshold:
            lo = mid
        else:
            hi = mid

    u_max = lo
    if u_max - s < BAND_MIN_WIDTH:
        raise InfeasibleError(f"No expansion band above s={s} (alpha={alpha}): u_max={u_max}")

    u = s + 0.5 * (u_max - s)
    certified = min(_analytic_band_minimum(alpha, s, u), _grid_band_minimum(alpha, s, u, grid))
    if certified <= threshold:
        raise InfeasibleError(f"Grid verification failed for band [{s}, {u}]: min f_t' = {certified}")

    band = ExpansionBand(
        alpha=float(alpha),
        s=float(s),
        u=float(u),
        p_s=fixed_source(alpha, s),
        p_u=fixed_source(alpha, u),
        min_derivative=certified,
    )
    logger.info(f"Expansion band for alpha={alpha}: [{band.s}, {band.u}], min f_t'={certified:.6f}")
    return band


@dataclass(frozen=True)
class Arc:
    """
    Arc of the circle starting at `start` and running counterclockwise

    length 1 is the full circle, length 0 a point.
    """

    start: float
    length: float

    def __post_init__(self):
        start = as_points(self.start, 'start')
        length = as_points(self.length, 'length')
        if not 0.0 <= float(length) <= 1.0:
            raise InputError(f"Arc length must lie in [0, 1], got {float(length)}")
        object.__setattr__(self, 'start', float(wrap(start)))
        object.__setattr__(self, 'length', float(length))

    @classmethod
    def full(cls):
        return cls(0.0, 1.0)

    @property
    def is_full(self):
        return self.length >= 1.0

    @property
    def end(self):
        """End point in the lift (may exceed 1)"""
        return self.start + self.length


def interval_image(circle_map, arc):
    """
    Image of an arc under a monotone circle map

    Args:
        circle_map: Any CircleMap
        arc: Arc

    Returns:
        Arc; the full circle once the lifted image is at least 1 long
    """
    if arc.is_full:
        return Arc.full()
    la = circle_map.lift_raw(np.float64(arc.start))
    lb = circle_map.lift_raw(np.float64(arc.start + arc.length))
    length = float(lb - la)
    if length >= 1.0:
        return Arc.full()
    return Arc(float(wrap(la)), max(length, 0.0))


def covering_trace(circle_map, arc, n_max):
    """
    Image lengths of arc, T(arc), T^2(arc), ... until the circle is covered

    Returns:
        List of lengths starting with the input length; ends with 1.0 when
        covered, otherwise after n_max images
    """
    lengths = [arc.length]
    current = arc
    for _ in range(n_max):
        if current.is_full:
            break
        current = interval_image(circle_map, current)
        lengths.append(current.length)
    return lengths


def covering_time(circle_map, arc, n_max):
    """
    Smallest n <= n_max with T^n(arc) the full circle

    Returns:
        Integer, or None when the search is exhausted (including arcs of
        length 0, which never grow)
    """
    if arc.is_full:
        return 0
    if arc.length <= 0.0:
        logger.warning(f"Covering search on a point arc at {arc.start}; reporting exhaustion")
        return None
    current = arc
    for n in range(1, n_max + 1):
        current = interval_image(circle_map, current)
        if current.is_full:
            return n
    return None


def inverse_lift(circle_map, y, tol=1e-13, max_iter=200):
    """
    Invert the lift on [0, 1] by vectorised bisection

    Returns the smallest x (to floating resolution) with L(x) >= y, so
    dyadic preimages of exact maps come back exactly.

    Args:
        circle_map: CircleMap
        y: Values in [0, degree]
        tol: Required bracket width
        max_iter: Bisection step cap

    Raises:
        InversionError: bracket still wider than tol after max_iter steps
    """
    y = as_points(y, 'y')
    if np.any((y < 0.0) | (y > circle_map.degree)):
        raise InputError(f"Lift values must lie in [0, {circle_map.degree}]")
    lo = np.zeros_like(y)
    hi = np.ones_like(y)
    for _ in range(max_iter):
        mid = lo + 0.5 * (hi - lo)
        below = circle_map.lift_raw(mid) < y
        new_lo = np.where(below, mid, lo)
        new_hi = np.where(below, hi, mid)
        if np.array_equal(new_lo, lo) and np.array_equal(new_hi, hi):
            break
        lo, hi = new_lo, new_hi
    width = float(np.max(hi - lo)) if hi.size else 0.0
    if width > tol:
        raise InversionError(f"Branch inversion did not converge: bracket width {width}")
    return unwrap_scalar(hi)
