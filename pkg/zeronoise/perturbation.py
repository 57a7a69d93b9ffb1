"""
Noise kernels on the parameter line and the random systems they drive

A RandomSystem couples a parametric family with a kernel theta:
    additive    x -> T(x) + t        (support inside [-1/2, 1/2])
    parametric  x -> f_t(x)          (support inside (0, 1])
One draw from the kernel is consumed per step.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, stats

from .dynamics import (
    CircleMap,
    IntermittentMap,
    saddle_affine_parts,
    saddle_branch_derivative,
    saddle_branch_lift,
)
from .exceptions import ConfigError, ContractViolation, ParameterError
from .utils import as_points, unwrap_scalar, wrap

logger = logging.getLogger(__name__)

SUPPORT_TOLERANCE = 1e-12
SENSITIVITY_FLOOR = 1e-8


class Mode(str, Enum):
    ADDITIVE = 'additive'
    PARAMETRIC = 'parametric'


@dataclass(frozen=True)
class NoiseKernel:
    """
    Parameter law theta given by a frozen scipy.stats distribution

    A kernel without a distribution is the point law at support_lo; it only
    serves as the zero-width limit for deterministic orbits and is rejected
    by the annealed Ulam assembly.
    """

    support_lo: float
    support_hi: float
    distribution: object = field(default=None, compare=False, repr=False)
    label: str = ''

    @property
    def is_point(self):
        return self.distribution is None

    @property
    def center(self):
        return 0.5 * (self.support_lo + self.support_hi)

    @property
    def width(self):
        return self.support_hi - self.support_lo

    def density(self, t):
        if self.is_point:
            raise ContractViolation(f"Kernel {self.label} is a point law and has no density")
        return self.distribution.pdf(t)

    def cdf(self, t):
        if self.is_point:
            return (np.asarray(t) >= self.support_lo).astype(np.float64)
        return self.distribution.cdf(t)

    def ppf(self, q):
        if self.is_point:
            return np.full(np.shape(q), self.support_lo, dtype=np.float64)
        return self.distribution.ppf(q)

    def sample(self, rng, size):
        """
        Inverse-CDF draws from a caller-owned numpy Generator

        Consumes exactly `size` doubles from rng, so consecutive calls read
        one contiguous stream.
        """
        return self.ppf(rng.random(size))

    def contains(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.all((t >= self.support_lo - SUPPORT_TOLERANCE) & (t <= self.support_hi + SUPPORT_TOLERANCE))

    def quadrature(self, order=8):
        """
        Gauss-Legendre nodes on the support weighted by the density

        Returns:
            Tuple (nodes, weights); weights sum to the kernel mass
        """
        if self.is_point:
            return np.array([self.support_lo]), np.array([1.0])
        nodes, weights = np.polynomial.legendre.leggauss(order)
        half = 0.5 * self.width
        t = self.center + half * nodes
        return t, half * weights * self.density(t)

    def total_mass(self):
        if self.is_point:
            return 1.0
        mass, _ = integrate.quad(self.density, self.support_lo, self.support_hi)
        return float(mass)

    def describe(self):
        return self.label


def uniform_kernel(eps):
    """Uniform law on [-eps, eps]"""
    if not np.isfinite(eps) or eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    eps = float(eps)
    return NoiseKernel(-eps, eps, stats.uniform(loc=-eps, scale=2.0 * eps), f"uniform({eps!r})")


def interval_kernel(lo, hi):
    """Uniform law on [lo, hi]"""
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise ParameterError(f"interval kernel needs lo < hi, got [{lo}, {hi}]")
    lo, hi = float(lo), float(hi)
    return NoiseKernel(lo, hi, stats.uniform(loc=lo, scale=hi - lo), f"interval({lo!r}, {hi!r})")


def point_kernel(center=0.0):
    """Zero-width limit: every draw equals center"""
    center = float(center)
    return NoiseKernel(center, center, None, f"point({center!r})")


_NOISE_PATTERN = re.compile(r'^\s*(uniform|interval|point)\s*\(([^)]*)\)\s*$')


def parse_noise(text):
    """
    Parse `uniform(eps)`, `interval(lo, hi)` or `point(c)`

    Raises:
        ConfigError: unrecognised form or bad numbers
    """
    match = _NOISE_PATTERN.match(text or '')
    if not match:
        raise ConfigError(f"Unrecognised noise specification: {text!r}")
    kind, raw_args = match.groups()
    try:
        args = [float(a) for a in raw_args.split(',') if a.strip()]
    except ValueError as e:
        raise ConfigError(f"Bad number in noise specification {text!r}: {e}")

    expected = {'uniform': 1, 'interval': 2, 'point': 1}[kind]
    if len(args) != expected:
        raise ConfigError(f"{kind}(...) takes {expected} argument(s), got {len(args)}")
    try:
        if kind == 'uniform':
            return uniform_kernel(args[0])
        if kind == 'interval':
            return interval_kernel(args[0], args[1])
        return point_kernel(args[0])
    except ParameterError as e:
        raise ConfigError(str(e))


@dataclass(frozen=True)
class RandomSystem:
    """
    Annealed Markov chain x -> T_t(x), t ~ kernel

    In additive mode `base_map` defaults to IntermittentMap(alpha); the
    reference maps of the dynamics module can be substituted there.
    """

    mode: Mode
    kernel: NoiseKernel
    alpha: float = 1.0
    base_map: CircleMap = None

    def __post_init__(self):
        mode = Mode(self.mode)
        object.__setattr__(self, 'mode', mode)
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")

        lo, hi = self.kernel.support_lo, self.kernel.support_hi
        if mode is Mode.ADDITIVE:
            if lo < -0.5 or hi > 0.5:
                raise ParameterError(f"Additive kernel support [{lo}, {hi}] must lie in [-1/2, 1/2]")
            if self.base_map is None:
                object.__setattr__(self, 'base_map', IntermittentMap(self.alpha))
        else:
            if lo <= 0.0 or hi > 1.0:
                raise ParameterError(f"Parametric kernel support [{lo}, {hi}] must lie in (0, 1]")
            if self.base_map is not None:
                raise ParameterError("Parametric mode always uses the saddle-node family")

    @property
    def degree(self):
        if self.mode is Mode.ADDITIVE:
            return self.base_map.degree
        return 2

    def lift_raw(self, x, t):
        """Lifted image of x under T_t, broadcasting over x and t"""
        if self.mode is Mode.ADDITIVE:
            return self.base_map.lift_raw(x) + t
        m = np.floor(x)
        return saddle_branch_lift(self.alpha, t, x - m) + 2.0 * m

    def step_raw(self, x, t):
        return wrap(self.lift_raw(x, t))

    def derivative_raw(self, x, t):
        if self.mode is Mode.ADDITIVE:
            return self.base_map.derivative_raw(x)
        return saddle_branch_derivative(self.alpha, t, wrap(x))

    def describe(self):
        info = {'mode': self.mode.value, 'alpha': self.alpha, 'noise': self.kernel.describe()}
        if self.mode is Mode.ADDITIVE and not isinstance(self.base_map, IntermittentMap):
            info['base_map'] = type(self.base_map).__name__
        return info


def step(system, x, draw):
    """
    One step of the random system

    Raises:
        ContractViolation: draw outside the kernel support
    """
    if not system.kernel.contains(draw):
        raise ContractViolation(f"Draw {draw} outside kernel support [{system.kernel.support_lo}, {system.kernel.support_hi}]")
    x = as_points(x)
    draw = as_points(draw, 'draw')
    return unwrap_scalar(system.step_raw(wrap(x), draw))


def step_many(system, x, draws):
    """Vectorised step over paired arrays of points and draws"""
    return step(system, np.asarray(x), np.asarray(draws))


@dataclass(frozen=True)
class PointCheck:
    x: float
    radius: float
    sensitivity: float
    absolutely_continuous: bool


@dataclass(frozen=True)
class NondegeneracyReport:
    """
    Image-ball radius and absolute continuity of t -> T_t(x)

    radius is the smallest radius over the checked points.
    """

    mode: str
    radius: float
    absolutely_continuous: bool
    checks: tuple

    @property
    def degenerate_points(self):
        return [c.x for c in self.checks if not c.absolutely_continuous]


def nondegeneracy_report(system, points=None):
    """
    Check that {T_t(x) : t in supp theta} contains a ball around T_c(x)

    Additive mode sweeps an arc of radius (hi - lo)/2 at every x. Parametric
    mode sweeps an arc of radius |a(x)| (hi - lo)/2 where f_t(x) = t a(x) + b(x);
    x = 0 and x = 1/2 are fixed images for the whole family and are flagged.

    Args:
        system: RandomSystem
        points: Points to check; defaults to the 64 points j/64

    Returns:
        NondegeneracyReport
    """
    kernel = system.kernel
    xs = np.arange(64) / 64.0 if points is None else wrap(as_points(points).ravel())
    half_width = 0.5 * kernel.width

    if system.mode is Mode.ADDITIVE:
        radii = np.full(xs.shape, half_width)
        sensitivity = np.ones_like(xs)
    else:
        a, _ = saddle_affine_parts(system.alpha, xs)
        radii = np.abs(a) * half_width
        h = max(1e-6 * kernel.width, 1e-12)
        c = min(max(kernel.center, kernel.support_lo + h), kernel.support_hi - h)
        sensitivity = np.abs(system.lift_raw(xs, c + h) - system.lift_raw(xs, c - h)) / (2.0 * h)

    checks = tuple(
        PointCheck(float(x), float(r), float(d), bool(d > SENSITIVITY_FLOOR and r > 0.0))
        for x, r, d in zip(xs, radii, sensitivity)
    )
    report = NondegeneracyReport(
        mode=system.mode.value,
        radius=float(np.min(radii)) if len(checks) else 0.0,
        absolutely_continuous=all(c.absolutely_continuous for c in checks),
        checks=checks,
    )
    if report.degenerate_points:
        logger.warning(f"Degenerate perturbation at x={report.degenerate_points} ({system.mode.value} mode)")
    return report
