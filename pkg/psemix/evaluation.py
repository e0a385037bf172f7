"""
Generalization and robustness protocols.

Each protocol is a pure function of its inputs and keyed random streams;
running it twice with the same seed gives the same rows.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .bagstore import Bag
from .division import DivisionConfig, divide
from .metrics import cross_entropy
from .mixing import DividedBag, MixConfig, draw_pairs, mix_bags, sample_mask
from .network import evaluate, predict
from .seeding import stream
from .validation import ConfigValidator, check

logger = logging.getLogger(__name__)

ROW_COLUMNS = ['protocol', 'setting', 'seed', 'checkpoint', 'acc', 'auc', 'ce']


@dataclass(frozen=True)
class EvalConfig:
    protocols: tuple = ('plain', 'gap', 'occlusion', 'corruption', 'inbetween')
    occlusion_ratios: tuple = (0.2, 0.4, 0.6, 0.8)
    lambda_grid: tuple = tuple(round(0.1 * i, 1) for i in range(11))

    def __post_init__(self):
        object.__setattr__(self, 'protocols', tuple(self.protocols))
        object.__setattr__(self, 'occlusion_ratios', tuple(self.occlusion_ratios))
        object.__setattr__(self, 'lambda_grid', tuple(self.lambda_grid))
        check(ConfigValidator.validate_eval(self))


def generalization_gap(params, train_bags, test_bags, num_classes, threads=1):
    """(train AUC - test AUC, test loss - train loss)."""
    train_report = evaluate(params, train_bags, num_classes, threads)
    test_report = evaluate(params, test_bags, num_classes, threads)
    return train_report.auc - test_report.auc, test_report.ce_loss - train_report.ce_loss


def gap_history(history):
    """Per-epoch gaps from a training history that tracked the test split."""
    return pd.DataFrame({
        'epoch': history['epoch'],
        'auc_gap': history['train_auc'] - history['test_auc'],
        'loss_gap': history['test_loss'] - history['train_loss'],
    })


def occlude(bag, ratio, rng):
    """Drop floor(ratio * m) random instances, keeping at least one."""
    keep = max(bag.m - math.floor(ratio * bag.m), 1)
    if keep == bag.m:
        return bag
    kept = np.sort(rng.choice(bag.m, size=keep, replace=False))
    return Bag(id=bag.id, features=bag.features[kept], label=bag.label)


def occlusion_test(params, test_bags, ratios, seed, num_classes, threads=1):
    """EvalReport per occlusion ratio."""
    reports = {}
    for ratio in ratios:
        occluded = [occlude(bag, ratio, stream(seed, 'occlusion', ratio, bag.id)) for bag in test_bags]
        reports[ratio] = evaluate(params, occluded, num_classes, threads)
        logger.info("occlusion %.0f%%: auc %.4f", 100 * ratio, reports[ratio].auc)
    return reports


def corrupt_labels(bags, ratio, rng, num_classes):
    """
    Relabel a random floor(ratio * N) subset uniformly over all classes.

    The original class may be redrawn. Returns (bags, selected indices).
    """
    selected = np.sort(rng.choice(len(bags), size=math.floor(ratio * len(bags)), replace=False))
    new_labels = rng.integers(num_classes, size=selected.size)
    corrupted = list(bags)
    for index, label in zip(selected, new_labels):
        corrupted[index] = corrupted[index].with_label(int(label))
    flipped = sum(corrupted[i].label != bags[i].label for i in selected)
    logger.info("corrupted %d of %d labels (%d changed class)", selected.size, len(bags), flipped)
    return corrupted, selected


def corrupt_dataset(dataset, ratio, seed):
    bags, _ = corrupt_labels(
        dataset.split('train'), ratio, stream(seed, 'corruption', ratio), dataset.num_classes,
    )
    return dataset.replace_split('train', bags)


def inbetween_test(params, train_bags, lambda_grid, mix_cfg, division_cfg, seed, num_classes):
    """
    Mean cross-entropy on mixed training bags at each fixed lambda.

    Pairs and masks are redrawn per lambda; soft labels follow mix_cfg.target_mode.
    """
    partitions = [divide(bag, division_cfg, stream(seed, 'inbetween-divide', bag.id)) for bag in train_bags]
    divided = [DividedBag(bag, part) for bag, part in zip(train_bags, partitions)]
    losses = {}
    for lam in lambda_grid:
        rng = stream(seed, 'inbetween', lam)
        values = []
        for a, b in draw_pairs(len(divided), rng):
            mask = sample_mask(lam, division_cfg.n, rng)
            sample = mix_bags(divided[a], divided[b], mask, num_classes, mix_cfg.target_mode)
            values.append(cross_entropy(predict(params, sample).probs, sample.label.probs))
        losses[lam] = float(np.mean(values)) if values else math.nan
    return losses


def report_rows(protocol, setting, seed, checkpoint, report):
    return report.as_row(protocol=protocol, setting=setting, seed=seed, checkpoint=checkpoint)


@dataclass
class ProtocolRun:
    """Everything one evaluation pass needs."""
    dataset: object
    best: object
    seed: int
    cfg: EvalConfig
    mix_cfg: MixConfig = field(default_factory=MixConfig)
    division_cfg: DivisionConfig = field(default_factory=DivisionConfig)
    last: object = None
    threads: int = 1


def run_protocols(run):
    """Rows of (protocol, setting, seed, checkpoint, acc, auc, ce) for run.cfg.protocols."""
    dataset, seed, C = run.dataset, run.seed, run.dataset.num_classes
    train_bags, test_bags = dataset.split('train'), dataset.split('test')
    rows = []

    if 'plain' in run.cfg.protocols:
        rows.append(report_rows('plain', '', seed, 'best', evaluate(run.best, test_bags, C, run.threads)))

    if 'gap' in run.cfg.protocols:
        # 'last' rows are the final-epoch gap
        checkpoints = [('best', run.best)] + ([('last', run.last)] if run.last is not None else [])
        for name, params in checkpoints:
            auc_gap, loss_gap = generalization_gap(params, train_bags, test_bags, C, run.threads)
            rows.append({'protocol': 'gap', 'setting': 'auc', 'seed': seed, 'checkpoint': name, 'auc': auc_gap})
            rows.append({'protocol': 'gap', 'setting': 'loss', 'seed': seed, 'checkpoint': name, 'ce': loss_gap})

    if 'occlusion' in run.cfg.protocols:
        reports = occlusion_test(run.best, test_bags, run.cfg.occlusion_ratios, seed, C, run.threads)
        rows.extend(report_rows('occlusion', f"{ratio:g}", seed, 'best', report) for ratio, report in reports.items())

    if 'corruption' in run.cfg.protocols:
        if run.last is None:
            logger.warning("corruption protocol skipped: no last-epoch checkpoint given")
        else:
            for name, params in (('best', run.best), ('last', run.last)):
                rows.append(report_rows('corruption', '', seed, name, evaluate(params, test_bags, C, run.threads)))

    if 'inbetween' in run.cfg.protocols:
        losses = inbetween_test(
            run.best, train_bags, run.cfg.lambda_grid, run.mix_cfg, run.division_cfg, seed, C,
        )
        rows.extend(
            {'protocol': 'inbetween', 'setting': f"{lam:g}", 'seed': seed, 'checkpoint': 'best', 'ce': value}
            for lam, value in losses.items()
        )

    return pd.DataFrame(rows, columns=ROW_COLUMNS)


def summarize_runs(rows, by=('variant', 'protocol', 'setting', 'checkpoint')):
    """Mean and sample standard deviation of acc/auc/ce over seeds."""
    keys = [key for key in by if key in rows.columns]
    grouped = rows.groupby(keys, dropna=False, sort=True)[['acc', 'auc', 'ce']]
    summary = grouped.agg(['mean', 'std', 'count'])
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    return summary.reset_index()

