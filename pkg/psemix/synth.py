"""
Synthetic MIL bags with planted phenotypes.

The bank holds G shared phenotype means followed by one discriminative
mean per class. A bag of class c draws ceil(rho * m) instances around
mean G + c and the rest around uniformly chosen shared means, so only a
minority of instances carries the label signal.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .bagstore import Bag, Dataset, SPLITS
from .seeding import stream
from .validation import ConfigValidator, check

logger = logging.getLogger(__name__)

MAX_BANK_TRIES = 1000
MAX_BANK_COSINE = 0.5


class PhenotypeBankError(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    """
    Synthetic dataset settings.

    ``noise`` is the relative noise norm: each instance gets
    ``noise / sqrt(dim)`` times standard normal noise per coordinate, so the
    expected noise norm is about ``noise`` against unit-norm phenotype means
    whatever ``dim`` is.
    """
    num_classes: int = 2
    num_shared_phenotypes: int = 6
    dim: int = 64
    min_bag_size: int = 200
    max_bag_size: int = 600
    discriminative_fraction: float = 0.2
    noise: float = 0.3
    train_bags: int = 200
    val_bags: int = 50
    test_bags: int = 100
    seed: int = 0

    def __post_init__(self):
        check(ConfigValidator.validate_synth(self))

    @property
    def bank_size(self):
        return self.num_shared_phenotypes + self.num_classes

    def split_sizes(self):
        return {'train': self.train_bags, 'val': self.val_bags, 'test': self.test_bags}


def gen_phenotype_bank(cfg, rng):
    """Unit vectors with pairwise |cos| below 0.5, drawn by rejection."""
    bank = []
    for _ in range(cfg.bank_size):
        for _attempt in range(MAX_BANK_TRIES):
            candidate = rng.standard_normal(cfg.dim)
            norm = np.linalg.norm(candidate)
            if norm == 0:
                continue
            candidate /= norm
            if all(abs(candidate @ other) < MAX_BANK_COSINE for other in bank):
                bank.append(candidate)
                break
        else:
            raise PhenotypeBankError(
                f"could not place phenotype {len(bank) + 1} of {cfg.bank_size} "
                f"in d={cfg.dim} after {MAX_BANK_TRIES} tries"
            )
    return np.vstack(bank)


def discriminative_count(m, fraction):
    # the epsilon keeps exact products such as 0.2 * 100 from rounding up
    return min(m, math.ceil(fraction * m - 1e-9))


def gen_bag_with_phenotypes(label, bank, cfg, rng, bag_id='bag', size=None):
    """A bag of class ``label`` plus the bank row each instance was drawn around."""
    if not 0 <= label < cfg.num_classes:
        raise ValueError(f"class {label} out of range for {cfg.num_classes} classes")
    m = size if size is not None else int(rng.integers(cfg.min_bag_size, cfg.max_bag_size + 1))
    n_disc = discriminative_count(m, cfg.discriminative_fraction)
    planted = np.full(m, cfg.num_shared_phenotypes + label, dtype=np.intp)
    if cfg.num_shared_phenotypes:
        planted[n_disc:] = rng.integers(cfg.num_shared_phenotypes, size=m - n_disc)
    elif n_disc < m:
        raise ValueError("bags need shared phenotypes when the discriminative fraction is below 1")
    noise = rng.standard_normal((m, cfg.dim)) * (cfg.noise / math.sqrt(cfg.dim))
    order = rng.permutation(m)
    features = bank[planted] + noise
    return Bag(id=bag_id, features=features[order], label=label), planted[order]


def gen_bag(label, bank, cfg, rng, bag_id='bag', size=None):
    return gen_bag_with_phenotypes(label, bank, cfg, rng, bag_id=bag_id, size=size)[0]


def _balanced_labels(count, num_classes, rng):
    return rng.permutation(np.arange(count) % num_classes)


def gen_dataset(cfg, sizes=None, threads=1):
    """Class-balanced train/val/test bags; every bag has its own keyed stream."""
    sizes = dict(cfg.split_sizes(), **(sizes or {}))
    bank = gen_phenotype_bank(cfg, stream(cfg.seed, 'bank'))
    specs = []
    for split in SPLITS:
        count = sizes[split]
        labels = _balanced_labels(count, cfg.num_classes, stream(cfg.seed, 'labels', split))
        specs.extend((f"{split}_{i:04d}", int(label), split) for i, label in enumerate(labels))

    bags = Parallel(n_jobs=threads, prefer='threads')(
        delayed(gen_bag)(label, bank, cfg, stream(cfg.seed, 'bag', bag_id), bag_id=bag_id)
        for bag_id, label, _ in specs
    )
    logger.info(
        "generated %d bags (C=%d, d=%d, m in [%d, %d])",
        len(bags), cfg.num_classes, cfg.dim, cfg.min_bag_size, cfg.max_bag_size,
    )
    return Dataset(
        bags=tuple(bags),
        num_classes=cfg.num_classes,
        dim=cfg.dim,
        splits=tuple(split for _, _, split in specs),
    )
