"""
Tests for noise kernels, random systems and the nondegeneracy check
"""

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st
from scipy import stats

from zeronoise.dynamics import DoublingMap, IntermittentMap, SaddleNodeMap
from zeronoise.exceptions import ConfigError, ContractViolation, InputError, ParameterError
from zeronoise.perturbation import (
    Mode,
    RandomSystem,
    interval_kernel,
    nondegeneracy_report,
    parse_noise,
    point_kernel,
    step,
    step_many,
    uniform_kernel,
)
from zeronoise.utils import circle_distance


class NoiseKernelTests(SimpleTestCase):

    def test_uniform_support(self):
        kernel = uniform_kernel(0.02)
        self.assertEqual(kernel.support_lo, -0.02)
        self.assertEqual(kernel.support_hi, 0.02)
        self.assertAlmostEqual(kernel.center, 0.0)
        self.assertAlmostEqual(kernel.total_mass(), 1.0, places=10)
        self.assertEqual(kernel.describe(), 'uniform(0.02)')

    def test_uniform_needs_positive_eps(self):
        for eps in (0.0, -0.1, float('nan')):
            with self.assertRaises(ParameterError):
                uniform_kernel(eps)

    def test_interval_needs_ordered_ends(self):
        with self.assertRaises(ParameterError):
            interval_kernel(0.9, 0.9)

    def test_point_kernel_sampling(self):
        kernel = point_kernel(0.25)
        self.assertTrue(kernel.is_point)
        draws = kernel.sample(np.random.default_rng(0), 5)
        np.testing.assert_array_equal(draws, np.full(5, 0.25))
        with self.assertRaises(ContractViolation):
            kernel.density(0.25)

    def test_samples_stay_in_support(self):
        kernel = interval_kernel(0.9, 1.0)
        draws = kernel.sample(np.random.default_rng(7), 10_000)
        self.assertTrue(kernel.contains(draws))
        self.assertAlmostEqual(float(draws.mean()), 0.95, delta=0.002)

    def test_sampling_consumes_one_double_per_draw(self):
        kernel = uniform_kernel(0.1)
        rng_a = np.random.default_rng(3)
        rng_b = np.random.default_rng(3)
        first = np.concatenate([kernel.sample(rng_a, 4), kernel.sample(rng_a, 6)])
        np.testing.assert_array_equal(first, kernel.sample(rng_b, 10))

    def test_samples_follow_the_cdf(self):
        rng = np.random.default_rng(11)
        for kernel in (uniform_kernel(0.05), interval_kernel(0.9, 1.0)):
            samples = kernel.sample(rng, 100_000)
            self.assertLessEqual(stats.kstest(samples, kernel.cdf).statistic, 0.01)

    def test_quadrature_integrates_the_density(self):
        nodes, weights = interval_kernel(0.5, 1.0).quadrature(order=6)
        self.assertAlmostEqual(float(weights.sum()), 1.0, places=12)
        self.assertAlmostEqual(float((nodes * weights).sum()), 0.75, places=12)


class ParseNoiseTests(SimpleTestCase):

    def test_known_forms(self):
        self.assertEqual(parse_noise('uniform(0.01)').support_hi, 0.01)
        kernel = parse_noise(' interval(0.9, 1) ')
        self.assertEqual((kernel.support_lo, kernel.support_hi), (0.9, 1.0))
        self.assertTrue(parse_noise('point(0)').is_point)

    def test_rejects_garbage(self):
        for text in ('gauss(0.1)', 'uniform()', 'interval(0.9)', 'uniform(x)', '', 'uniform(-1)'):
            with self.assertRaises(ConfigError):
                parse_noise(text)


class RandomSystemTests(SimpleTestCase):

    def test_additive_defaults_to_intermittent(self):
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(0.01), alpha=0.5)
        self.assertEqual(system.base_map, IntermittentMap(0.5))
        self.assertEqual(system.degree, 2)

    def test_mode_accepts_strings(self):
        system = RandomSystem('parametric', interval_kernel(0.9, 1.0), alpha=0.5)
        self.assertIs(system.mode, Mode.PARAMETRIC)

    def test_additive_support_bound(self):
        with self.assertRaises(ParameterError):
            RandomSystem(Mode.ADDITIVE, uniform_kernel(0.6), alpha=0.5)

    def test_parametric_support_bound(self):
        with self.assertRaises(ParameterError):
            RandomSystem(Mode.PARAMETRIC, interval_kernel(0.0, 1.0), alpha=0.5)
        with self.assertRaises(ParameterError):
            RandomSystem(Mode.PARAMETRIC, interval_kernel(0.9, 1.1), alpha=0.5)

    def test_parametric_rejects_base_map(self):
        with self.assertRaises(ParameterError):
            RandomSystem(Mode.PARAMETRIC, interval_kernel(0.9, 1.0), 0.5, base_map=DoublingMap())

    def test_additive_step(self):
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(0.1), alpha=1.0)
        self.assertAlmostEqual(step(system, 0.25, 0.05), 0.425, places=15)
        self.assertAlmostEqual(step(system, 0.75, -0.1), 0.525, places=14)

    def test_parametric_step_matches_family(self):
        system = RandomSystem(Mode.PARAMETRIC, interval_kernel(0.5, 1.0), alpha=0.7)
        for x in (0.1, 0.3, 0.6, 0.95):
            self.assertAlmostEqual(step(system, x, 0.8), SaddleNodeMap(0.7, 0.8).image(x), places=14)

    @given(st.floats(min_value=0.0, max_value=0.999), st.floats(min_value=-0.05, max_value=0.05))
    def test_additive_noise_translates_the_image(self, x, t):
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(0.05), alpha=0.5)
        shifted = (step(system, x, 0.0) + t) % 1.0
        self.assertLessEqual(float(circle_distance(step(system, x, t), shifted)), 1e-14)

    def test_draw_outside_support(self):
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(0.01), alpha=0.5)
        with self.assertRaises(ContractViolation):
            step(system, 0.3, 0.02)

    def test_non_finite_point(self):
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(0.01), alpha=0.5)
        with self.assertRaises(InputError):
            step(system, float('inf'), 0.0)

    @given(st.lists(st.floats(min_value=0.0, max_value=0.999), min_size=1, max_size=20))
    def test_step_many_matches_step(self, xs):
        system = RandomSystem(Mode.ADDITIVE, uniform_kernel(0.05), alpha=0.5)
        draws = np.linspace(-0.05, 0.05, len(xs))
        batch = step_many(system, xs, draws)
        for x, t, y in zip(xs, draws, np.atleast_1d(batch)):
            self.assertAlmostEqual(step(system, x, t), float(y), places=15)
            self.assertGreaterEqual(float(y), 0.0)
            self.assertLess(float(y), 1.0)


class NondegeneracyTests(SimpleTestCase):

    def test_additive_is_nondegenerate(self):
        report = nondegeneracy_report(RandomSystem(Mode.ADDITIVE, uniform_kernel(0.02), alpha=0.5))
        self.assertTrue(report.absolutely_continuous)
        self.assertAlmostEqual(report.radius, 0.02)
        self.assertEqual(report.degenerate_points, [])

    def test_parametric_degenerates_at_fixed_images(self):
        system = RandomSystem(Mode.PARAMETRIC, interval_kernel(0.9, 1.0), alpha=0.5)
        report = nondegeneracy_report(system)
        self.assertFalse(report.absolutely_continuous)
        self.assertEqual(report.degenerate_points, [0.0, 0.5])
        self.assertEqual(report.radius, 0.0)

    def test_parametric_away_from_fixed_images(self):
        system = RandomSystem(Mode.PARAMETRIC, interval_kernel(0.9, 1.0), alpha=0.5)
        report = nondegeneracy_report(system, points=[0.2, 0.7])
        self.assertTrue(report.absolutely_continuous)
        self.assertGreater(report.radius, 0.0)
