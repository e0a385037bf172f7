"""
Bag-level and target-level mixing.

PseMix mixes two divided bags pseudo-bag by pseudo-bag: a mask over the n
pseudo-bag positions says which positions bag A contributes (ones) and
which bag B contributes (zeros). With probability p the two halves are
joined into a mixed bag with a soft label; otherwise B's kept pseudo-bags
are emitted alone as a masked bag carrying B's label.

Mixup (feature interpolation) and InstanceMix (instance-level masking)
are provided as baselines.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bagstore import SoftLabel
from .validation import ConfigValidator, check

logger = logging.getLogger(__name__)

PSEUDO_BAG_MR = 'pseudo_bag_mr'
INSTANCE_MR = 'instance_mr'
SAMPLED_LAMBDA = 'sampled_lambda'

MIXED = 'mixed'
MASKED = 'masked'
RAW = 'raw'


class MixingError(ValueError):
    pass


@dataclass(frozen=True)
class MixConfig:
    alpha: float = 1.0
    p: float = 0.8
    target_mode: str = PSEUDO_BAG_MR
    emit_both_masked: bool = False

    def __post_init__(self):
        check(ConfigValidator.validate_mixing(self))


@dataclass(frozen=True)
class MixMask:
    lam: float
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        mask.flags.writeable = False
        object.__setattr__(self, 'mask', mask)

    @property
    def n(self):
        return self.mask.size

    @property
    def kept_a(self):
        return int(self.mask.sum())

    @property
    def kept_b(self):
        return self.n - self.kept_a

    def positions_a(self):
        return np.flatnonzero(self.mask)

    def positions_b(self):
        return np.flatnonzero(~self.mask)


@dataclass(frozen=True)
class DividedBag:
    """A bag together with its pseudo-bag partition."""
    bag: object
    partition: object

    @property
    def id(self):
        return self.bag.id

    def instances_of(self, positions):
        """Sorted instance indices belonging to the given pseudo-bag positions."""
        return np.flatnonzero(np.isin(self.partition.pseudo_bag, positions))


@dataclass(frozen=True)
class Provenance:
    a_id: str
    b_id: str = None
    a_pseudo_bags: tuple = ()
    b_pseudo_bags: tuple = ()
    a_instances: tuple = ()
    b_instances: tuple = ()


@dataclass(frozen=True, eq=False)
class AugmentedSample:
    id: str
    features: np.ndarray
    label: SoftLabel
    kind: str
    provenance: Provenance = field(default=None)

    @property
    def m(self):
        return self.features.shape[0]


def sample_lambda(alpha, rng):
    """Draw from Beta(alpha, alpha); alpha = 0 degenerates to a fair coin on {0, 1}."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if alpha == 0:
        return float(rng.integers(0, 2))
    return float(rng.beta(alpha, alpha))


def kept_count(lam, n):
    """Number of pseudo-bags bag A keeps: floor(lam * (n + 1)) clamped to [0, n]."""
    return min(max(math.floor(lam * (n + 1)), 0), n)


def sample_mask(lam, n, rng):
    kept_a = kept_count(lam, n)
    mask = np.zeros(n, dtype=bool)
    mask[rng.choice(n, size=kept_a, replace=False)] = True
    return MixMask(lam=lam, mask=mask)


def mix_targets(y_a, y_b, mask, mode=PSEUDO_BAG_MR, instance_counts=None):
    """Interpolate two labels with the weight on y_a chosen by ``mode``."""
    if mode == PSEUDO_BAG_MR:
        weight = mask.kept_a / mask.n
    elif mode == INSTANCE_MR:
        from_a, from_b = instance_counts
        weight = from_a / (from_a + from_b)
    elif mode == SAMPLED_LAMBDA:
        weight = mask.lam
    else:
        raise MixingError(f"unknown target mode {mode!r}")
    probs = weight * y_a.probs + (1.0 - weight) * y_b.probs
    return SoftLabel(probs / probs.sum())


def mix_bags(a, b, mask, num_classes, target_mode=PSEUDO_BAG_MR):
    """Join A's pseudo-bags at mask-1 positions with B's at mask-0 positions."""
    if a.partition.n != b.partition.n or mask.n != a.partition.n:
        raise MixingError(
            f"pseudo-bag counts differ: {a.id} n={a.partition.n}, "
            f"{b.id} n={b.partition.n}, mask n={mask.n}"
        )
    from_a = a.instances_of(mask.positions_a())
    from_b = b.instances_of(mask.positions_b())
    features = np.concatenate([a.bag.matrix()[from_a], b.bag.matrix()[from_b]])
    label = mix_targets(
        SoftLabel.one_hot(a.bag.label, num_classes),
        SoftLabel.one_hot(b.bag.label, num_classes),
        mask,
        mode=target_mode,
        instance_counts=(from_a.size, from_b.size),
    )
    return AugmentedSample(
        id=f"{a.id}+{b.id}",
        features=features,
        label=label,
        kind=MIXED,
        provenance=Provenance(
            a_id=a.id,
            b_id=b.id,
            a_pseudo_bags=tuple(mask.positions_a().tolist()),
            b_pseudo_bags=tuple(mask.positions_b().tolist()),
            a_instances=tuple(from_a.tolist()),
            b_instances=tuple(from_b.tolist()),
        ),
    )


def _masked(divided, positions, rng, num_classes):
    if positions.size == 0:
        positions = np.array([rng.integers(divided.partition.n)])
        logger.debug("%s: mask kept no pseudo-bag, resampled position %d", divided.id, positions[0])
    kept = divided.instances_of(positions)
    return AugmentedSample(
        id=f"{divided.id}~masked",
        features=divided.bag.matrix()[kept],
        label=SoftLabel.one_hot(divided.bag.label, num_classes),
        kind=MASKED,
        provenance=Provenance(
            a_id=divided.id,
            a_pseudo_bags=tuple(positions.tolist()),
            a_instances=tuple(kept.tolist()),
        ),
    )


def mask_bag(b, mask, rng, num_classes):
    """B's pseudo-bags at mask-0 positions, labelled one-hot y_B; never empty."""
    return _masked(b, mask.positions_b(), rng, num_classes)


def psemix_samples(a, b, cfg, rng, num_classes):
    """One r-mix draw for the pair; two samples on the masked branch with emit_both_masked."""
    if a.id == b.id:
        raise MixingError(f"cannot pair bag {a.id} with itself")
    if a.partition.n != b.partition.n:
        raise MixingError(f"pseudo-bag counts differ: {a.partition.n} vs {b.partition.n}")
    lam = sample_lambda(cfg.alpha, rng)
    mask = sample_mask(lam, a.partition.n, rng)
    if rng.random() < cfg.p:
        return [mix_bags(a, b, mask, num_classes, cfg.target_mode)]
    samples = [mask_bag(b, mask, rng, num_classes)]
    if cfg.emit_both_masked:
        samples.append(_masked(a, mask.positions_a(), rng, num_classes))
    return samples


def psemix_pair(a, b, cfg, rng, num_classes):
    """Mixed bag with probability cfg.p, otherwise B's masked bag."""
    return psemix_samples(a, b, replace(cfg, emit_both_masked=False), rng, num_classes)[0]


def _subsample(X, size, rng):
    if X.shape[0] == size:
        return X, np.arange(size)
    keep = np.sort(rng.choice(X.shape[0], size=size, replace=False))
    return X[keep], keep


def mixup_interpolate(a, b, alpha, rng, num_classes, lam=None):
    """Mixup on bags: align sizes by random dropping, then interpolate features."""
    if lam is None:
        lam = sample_lambda(alpha, rng)
    size = min(a.m, b.m)
    X_a, keep_a = _subsample(a.matrix(), size, rng)
    X_b, keep_b = _subsample(b.matrix(), size, rng)
    probs = lam * SoftLabel.one_hot(a.label, num_classes).probs \
        + (1.0 - lam) * SoftLabel.one_hot(b.label, num_classes).probs
    return AugmentedSample(
        id=f"{a.id}*{b.id}",
        features=lam * X_a + (1.0 - lam) * X_b,
        label=SoftLabel(probs / probs.sum()),
        kind=MIXED,
        provenance=Provenance(
            a_id=a.id, b_id=b.id,
            a_instances=tuple(keep_a.tolist()), b_instances=tuple(keep_b.tolist()),
        ),
    )


def instancemix(a, b, alpha, rng, num_classes, lam=None):
    """Keep floor(lam*m_A) random instances of A and floor((1-lam)*m_B) of B."""
    if lam is None:
        lam = sample_lambda(alpha, rng)
    kept_a = math.floor(lam * a.m)
    kept_b = math.floor((1.0 - lam) * b.m)
    if kept_a == 0 and kept_b == 0:
        kept_b = 1
    _, from_a = _subsample(a.matrix(), kept_a, rng)
    _, from_b = _subsample(b.matrix(), kept_b, rng)
    probs = lam * SoftLabel.one_hot(a.label, num_classes).probs \
        + (1.0 - lam) * SoftLabel.one_hot(b.label, num_classes).probs
    return AugmentedSample(
        id=f"{a.id}|{b.id}",
        features=np.concatenate([a.matrix()[from_a], b.matrix()[from_b]]),
        label=SoftLabel(probs / probs.sum()),
        kind=MIXED,
        provenance=Provenance(
            a_id=a.id, b_id=b.id,
            a_instances=tuple(from_a.tolist()), b_instances=tuple(from_b.tolist()),
        ),
    )


def raw_sample(bag, num_classes):
    return AugmentedSample(
        id=bag.id,
        features=bag.matrix(),
        label=SoftLabel.one_hot(bag.label, num_classes),
        kind=RAW,
        provenance=Provenance(a_id=bag.id),
    )


def draw_pairs(count, rng):
    """
    Pair every position of a shuffled epoch with a uniformly drawn other position.

    Returns (a, b) index pairs with a != b; empty when fewer than two items.
    """
    if count < 2:
        return []
    pairs = []
    for a in rng.permutation(count):
        b = int(rng.integers(count - 1))
        if b >= a:
            b += 1
        pairs.append((int(a), b))
    return pairs


def augment_epoch(divided, cfg, rng, num_classes):
    """PseMix training stream for one epoch over a list of DividedBag."""
    samples = []
    for a, b in draw_pairs(len(divided), rng):
        samples.extend(psemix_samples(divided[a], divided[b], cfg, rng, num_classes))
    mixed = sum(sample.kind == MIXED for sample in samples)
    logger.debug("epoch stream: %d samples, %d mixed", len(samples), mixed)
    return samples
