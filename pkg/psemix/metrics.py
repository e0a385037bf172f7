"""
Classification metrics over bag predictions.

Predictions are N x C probability matrices (rows of SoftLabel.probs).
"""
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

LOG_EPS = 1e-12


@dataclass(frozen=True)
class EvalReport:
    acc: float
    auc: float
    ce_loss: float
    count: int

    def as_row(self, **context):
        row = dict(context)
        row.update(acc=self.acc, auc=self.auc, ce=self.ce_loss)
        return row

    def to_dict(self):
        return asdict(self)


def _matrix(predictions):
    rows = [p.probs if hasattr(p, 'probs') else p for p in predictions]
    return np.atleast_2d(np.asarray(rows, dtype=np.float64))


def accuracy(predictions, labels):
    """Fraction of argmax hits; ties resolve to the lowest class index."""
    probs = _matrix(predictions)
    labels = np.asarray(labels)
    if labels.size == 0:
        return math.nan
    return float(np.mean(np.argmax(probs, axis=1) == labels))


def auc_binary(scores, labels):
    """
    ROC-AUC as the Mann-Whitney statistic: the share of positive/negative
    pairs ordered correctly, ties counting one half. NaN when a class is absent.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(labels).astype(bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return math.nan
    ranks = rankdata(scores, method='average')
    u_statistic = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def auc_macro_ovr(predictions, labels, num_classes):
    """Unweighted mean of one-vs-rest AUCs, skipping undefined classes."""
    probs = _matrix(predictions)
    labels = np.asarray(labels)
    if num_classes == 2:
        return auc_binary(probs[:, 1], labels == 1)
    per_class = [auc_binary(probs[:, c], labels == c) for c in range(num_classes)]
    defined = [auc for auc in per_class if not math.isnan(auc)]
    return float(np.mean(defined)) if defined else math.nan


def cross_entropy(probs, target):
    """-sum_c target_c * log(probs_c + eps) for one prediction."""
    return float(-np.sum(np.asarray(target) * np.log(np.asarray(probs) + LOG_EPS)))


def mean_cross_entropy(predictions, targets):
    probs = _matrix(predictions)
    targets = _matrix(targets)
    if probs.shape[0] == 0:
        return math.nan
    return float(np.mean(-np.sum(targets * np.log(probs + LOG_EPS), axis=1)))


def summarize(predictions, labels, num_classes):
    probs = _matrix(predictions)
    labels = np.asarray(labels, dtype=np.intp)
    if labels.size == 0:
        return EvalReport(acc=math.nan, auc=math.nan, ce_loss=math.nan, count=0)
    one_hot = np.eye(num_classes)[labels]
    return EvalReport(
        acc=accuracy(probs, labels),
        auc=auc_macro_ovr(probs, labels, num_classes),
        ce_loss=mean_cross_entropy(probs, one_hot),
        count=int(labels.size),
    )
