import pandas as pd
from django.test import SimpleTestCase, tag

from psemix.benchmark import bench_checks, loglog_slope, run_bench
from psemix.division import DivisionConfig
from psemix.reports import ReportWriter
from psemix.runconfig import BenchConfig


class LoglogSlopeTests(SimpleTestCase):

    def test_linear_growth(self):
        self.assertAlmostEqual(loglog_slope([1000, 2000, 4000, 8000], [1.0, 2.0, 4.0, 8.0]), 1.0)

    def test_quadratic_growth(self):
        self.assertAlmostEqual(loglog_slope([10, 20, 40], [1.0, 4.0, 16.0]), 2.0)


class BenchChecksTests(SimpleTestCase):

    def summary(self, kmeans_factor, random_factor=0.5):
        rows = []
        for m in (1000, 2000, 4000, 8000):
            base = m * 1e-6
            rows += [
                {'method': 'prototype_ft', 'm': m, 'mean_s': base},
                {'method': 'kmeans', 'm': m, 'mean_s': base * kmeans_factor},
                {'method': 'random', 'm': m, 'mean_s': base * random_factor},
            ]
        return pd.DataFrame(rows)

    def test_all_pass(self):
        checks = bench_checks(self.summary(kmeans_factor=50))
        self.assertTrue(checks['passed'].all())
        self.assertEqual(len(checks), 3)

    def test_slow_prototype_ft_fails_speed_check(self):
        checks = bench_checks(self.summary(kmeans_factor=3)).set_index('check')
        self.assertFalse(checks.loc['kmeans_over_prototype_ft', 'passed'])
        self.assertTrue(checks.loc['prototype_ft_loglog_slope', 'passed'])

    def test_random_not_fastest(self):
        checks = bench_checks(self.summary(kmeans_factor=50, random_factor=2.0)).set_index('check')
        self.assertFalse(checks.loc['random_fastest', 'passed'])


@tag('slow')
class ComplexityBenchTests(SimpleTestCase):

    def test_default_bench(self):
        timings = run_bench(BenchConfig(), DivisionConfig(), seed=0)
        checks = bench_checks(ReportWriter.timing_summary(timings))
        self.assertTrue(checks['passed'].all(), checks.to_string())
