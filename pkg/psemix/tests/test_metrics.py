import math

import numpy as np
from django.test import SimpleTestCase

from psemix.metrics import (
    accuracy,
    auc_binary,
    auc_macro_ovr,
    cross_entropy,
    mean_cross_entropy,
    summarize,
)


def pairwise_auc(scores, labels):
    positives = [s for s, y in zip(scores, labels) if y]
    negatives = [s for s, y in zip(scores, labels) if not y]
    correct = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                correct += 1.0
            elif p == n:
                correct += 0.5
    return correct / (len(positives) * len(negatives))


class AccuracyTests(SimpleTestCase):

    def test_all_correct(self):
        self.assertEqual(accuracy(np.eye(3), [0, 1, 2]), 1.0)

    def test_tie_goes_to_lowest_class(self):
        self.assertEqual(accuracy([[0.5, 0.5]], [0]), 1.0)
        self.assertEqual(accuracy([[0.5, 0.5]], [1]), 0.0)

    def test_matches_recount(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n, C = int(rng.integers(1, 30)), int(rng.integers(2, 5))
            probs = rng.dirichlet(np.ones(C), size=n)
            labels = rng.integers(C, size=n)
            hits = 0
            for row, label in zip(probs, labels):
                best = max(range(C), key=lambda c: (row[c], -c))
                hits += best == label
            self.assertEqual(accuracy(probs, labels), hits / n)

    def test_empty(self):
        self.assertTrue(math.isnan(accuracy(np.empty((0, 2)), [])))


class AucTests(SimpleTestCase):

    def test_perfect_ordering(self):
        self.assertEqual(auc_binary([0.9, 0.8, 0.3], [1, 1, 0]), 1.0)

    def test_full_tie(self):
        self.assertEqual(auc_binary([0.5, 0.5], [1, 0]), 0.5)

    def test_partial_ordering(self):
        self.assertEqual(auc_binary([0.2, 0.7, 0.6, 0.4], [0, 1, 0, 1]), 0.75)

    def test_single_class_is_missing(self):
        self.assertTrue(math.isnan(auc_binary([0.1, 0.4], [1, 1])))
        self.assertTrue(math.isnan(auc_binary([0.1, 0.4], [0, 0])))

    def test_equals_pairwise_oracle(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 1000:
            n = int(rng.integers(2, 201))
            # coarse scores force ties
            scores = rng.integers(0, int(rng.integers(2, 20)), size=n) / 10.0
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            self.assertEqual(auc_binary(scores, labels), pairwise_auc(scores, labels))
            checked += 1

    def test_macro_ovr_three_classes(self):
        probs = np.array([
            [0.8, 0.1, 0.1],
            [0.2, 0.7, 0.1],
            [0.1, 0.2, 0.7],
            [0.6, 0.3, 0.1],
        ])
        labels = np.array([0, 1, 2, 0])
        expected = np.mean([auc_binary(probs[:, c], labels == c) for c in range(3)])
        self.assertAlmostEqual(auc_macro_ovr(probs, labels, 3), expected)

    def test_macro_ovr_skips_absent_class(self):
        probs = np.array([[0.7, 0.2, 0.1], [0.2, 0.7, 0.1], [0.6, 0.3, 0.1]])
        labels = np.array([0, 1, 0])
        expected = np.mean([auc_binary(probs[:, 0], labels == 0), auc_binary(probs[:, 1], labels == 1)])
        self.assertAlmostEqual(auc_macro_ovr(probs, labels, 3), expected)

    def test_binary_uses_positive_column(self):
        probs = np.array([[0.9, 0.1], [0.2, 0.8], [0.4, 0.6]])
        self.assertEqual(auc_macro_ovr(probs, [0, 1, 1], 2), 1.0)


class CrossEntropyTests(SimpleTestCase):

    def test_one_hot_target(self):
        self.assertAlmostEqual(cross_entropy([0.25, 0.75], [0.0, 1.0]), -math.log(0.75 + 1e-12))

    def test_epsilon_guard(self):
        self.assertTrue(math.isfinite(cross_entropy([1.0, 0.0], [0.0, 1.0])))

    def test_mean_over_rows(self):
        probs = [[0.5, 0.5], [0.9, 0.1]]
        targets = [[1.0, 0.0], [1.0, 0.0]]
        expected = (-math.log(0.5 + 1e-12) - math.log(0.9 + 1e-12)) / 2
        self.assertAlmostEqual(mean_cross_entropy(probs, targets), expected)


class SummarizeTests(SimpleTestCase):

    def test_report(self):
        report = summarize(np.array([[0.9, 0.1], [0.3, 0.7], [0.6, 0.4]]), [0, 1, 1], 2)
        self.assertAlmostEqual(report.acc, 2 / 3)
        self.assertEqual(report.auc, 1.0)
        self.assertEqual(report.count, 3)
        row = report.as_row(protocol='plain')
        self.assertEqual(set(row), {'protocol', 'acc', 'auc', 'ce'})

    def test_empty_split(self):
        report = summarize(np.empty((0, 2)), [], 2)
        self.assertEqual(report.count, 0)
        self.assertTrue(math.isnan(report.auc))
