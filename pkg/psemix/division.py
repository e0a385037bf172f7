"""
Pseudo-bag division.

A bag is first grouped into phenotypes (instance clusters) and every
phenotype stratum is then split evenly across n pseudo-bags, so each
pseudo-bag keeps roughly the phenotype mix of its parent bag.

Phenotypes come from one of four methods:

- ``prototype_ft``: bin instances by cosine similarity to the bag mean
  (the prototype), then refine the bins with k centroid iterations.
- ``prototype``: the similarity bins without refinement.
- ``kmeans``: classical Euclidean K-means with random instance seeds.
- ``random``: no phenotypes; instances are dealt to pseudo-bags uniformly.
"""
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from .bagstore import Bag
from .seeding import child_seed, stream
from .validation import ConfigValidator, check

logger = logging.getLogger(__name__)

KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10


class BagTooSmallError(ValueError):
    pass


class PartitionError(ValueError):
    """A partition violates coverage, range or balance constraints."""


@dataclass(frozen=True)
class DivisionConfig:
    n: int = 30
    l: int = 8
    k: int = 8
    method: str = 'prototype_ft'
    strict: bool = True

    def __post_init__(self):
        check(ConfigValidator.validate_division(self))


@dataclass(frozen=True)
class ClusterState:
    """
    Phenotype clustering of one bag.

    ``centroids`` are the ones the last reassignment was made against (NaN
    rows for clusters that were empty then); ``members`` follow the final
    ``phenotype`` assignment.
    """
    prototype: np.ndarray
    centroids: np.ndarray
    members: tuple
    similarities: np.ndarray
    phenotype: np.ndarray


@dataclass(frozen=True)
class PseudoBagPartition:
    bag_id: str
    n: int
    l: int
    phenotype: np.ndarray
    pseudo_bag: np.ndarray

    def __post_init__(self):
        for name in ('phenotype', 'pseudo_bag'):
            values = np.array(getattr(self, name), dtype=np.intp, copy=True)
            values.flags.writeable = False
            object.__setattr__(self, name, values)

    @property
    def m(self):
        return self.pseudo_bag.size

    def members(self, tau):
        """Instance indices of pseudo-bag ``tau`` in ascending order."""
        return np.flatnonzero(self.pseudo_bag == tau)

    def sizes(self):
        return np.bincount(self.pseudo_bag, minlength=self.n)

    def validate(self):
        """Raise PartitionError unless every partition invariant holds."""
        if self.phenotype.shape != self.pseudo_bag.shape or self.pseudo_bag.ndim != 1:
            raise PartitionError(f"{self.bag_id}: phenotype and pseudo_bag must be equal-length vectors")
        if self.m and (self.phenotype.min() < 0 or self.phenotype.max() >= self.l):
            raise PartitionError(f"{self.bag_id}: phenotype index outside [0, {self.l})")
        if self.m and (self.pseudo_bag.min() < 0 or self.pseudo_bag.max() >= self.n):
            raise PartitionError(f"{self.bag_id}: pseudo-bag index outside [0, {self.n})")
        for c in np.unique(self.phenotype):
            counts = np.bincount(self.pseudo_bag[self.phenotype == c], minlength=self.n)
            if counts.max() - counts.min() > 1:
                raise PartitionError(
                    f"{self.bag_id}: phenotype {c} split unevenly, sizes {counts.min()}..{counts.max()}"
                )
        if self.m >= self.n and (self.sizes() == 0).any():
            raise PartitionError(f"{self.bag_id}: empty pseudo-bag although m >= n")
        return self

    def to_sidecar(self):
        return {
            'bag_id': self.bag_id,
            'n': self.n,
            'l': self.l,
            'phenotype': self.phenotype.tolist(),
            'pseudo_bag': self.pseudo_bag.tolist(),
        }

    @classmethod
    def from_sidecar(cls, data):
        return cls(
            bag_id=data['bag_id'],
            n=int(data['n']),
            l=int(data['l']),
            phenotype=data['phenotype'],
            pseudo_bag=data['pseudo_bag'],
        )


def _features(bag):
    if isinstance(bag, Bag):
        return bag.matrix()
    return np.asarray(bag, dtype=np.float64)


def _normalize_rows(X):
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def compute_prototype(bag):
    """Mean instance feature of the bag."""
    X = _features(bag)
    if X.shape[0] < 1:
        raise ValueError("cannot compute the prototype of an empty bag")
    return X.mean(axis=0)


def cosine_similarity(a, b):
    """Cosine of the angle between a and b; 0 when either vector is zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        return 0.0
    return float(np.clip(a @ b / (norm_a * norm_b), -1.0, 1.0))


def prototype_similarities(bag):
    X = _features(bag)
    prototype = _normalize_rows(compute_prototype(X))
    return np.clip(_normalize_rows(X) @ prototype, -1.0, 1.0)


def similarity_bin(similarities, l):
    """
    0-based bin of each similarity among l equal-width bins over [-1, 1].

    Bins are half-open on the right except the last, which also takes s = 1.
    """
    s = np.clip(np.asarray(similarities, dtype=np.float64), -1.0, 1.0)
    return np.clip(np.floor((s + 1.0) * l / 2.0), 0, l - 1).astype(np.intp)


def initial_phenotypes(bag, l):
    if l < 1:
        raise ValueError(f"phenotype count must be at least 1, got {l}")
    return similarity_bin(prototype_similarities(bag), l)


def _centroids(X, phenotype, l):
    m, d = X.shape
    counts = np.bincount(phenotype, minlength=l)
    one_hot = np.zeros((m, l))
    one_hot[np.arange(m), phenotype] = 1.0
    sums = one_hot.T @ X
    nonempty = counts > 0
    centroids = np.full((l, d), np.nan)
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    return centroids, nonempty


def _nearest_centroid(X_unit, centroids, nonempty):
    # argmax picks the first maximum, i.e. the lowest cluster index on ties
    active = np.flatnonzero(nonempty)
    similarities = X_unit @ _normalize_rows(centroids[active]).T
    return active[np.argmax(similarities, axis=1)]


def finetune_clusters(bag, phenotypes, k, l=None):
    """Run exactly k centroid/reassignment iterations and return the clustering."""
    if k < 0:
        raise ValueError(f"fine-tuning iterations must be non-negative, got {k}")
    X = _features(bag)
    phenotype = np.array(phenotypes, dtype=np.intp, copy=True)
    if l is None:
        l = int(phenotype.max()) + 1
    X_unit = _normalize_rows(X)

    centroids, nonempty = _centroids(X, phenotype, l)
    for iteration in range(k):
        if iteration:
            centroids, nonempty = _centroids(X, phenotype, l)
        phenotype = _nearest_centroid(X_unit, centroids, nonempty)

    prototype = X.mean(axis=0)
    return ClusterState(
        prototype=prototype,
        centroids=centroids,
        members=tuple(np.flatnonzero(phenotype == c) for c in range(l)),
        similarities=np.clip(X_unit @ _normalize_rows(prototype), -1.0, 1.0),
        phenotype=phenotype,
    )


def finetune_phenotypes(bag, phenotypes, k, l=None):
    return finetune_clusters(bag, phenotypes, k, l).phenotype


def cluster_state(bag, phenotypes, l):
    """Clustering state of a fixed assignment, with centroids as member means."""
    return finetune_clusters(bag, phenotypes, 0, l)


def kmeans_phenotypes(bag, l, rng):
    X = _features(bag)
    clusters = min(l, X.shape[0])
    model = KMeans(
        n_clusters=clusters,
        init='random',
        n_init=KMEANS_RESTARTS,
        max_iter=KMEANS_MAX_ITER,
        tol=0.0,
        algorithm='lloyd',
        random_state=child_seed(rng),
    )
    with warnings.catch_warnings():
        # duplicate instances leave fewer distinct clusters than requested
        warnings.simplefilter('ignore', ConvergenceWarning)
        return model.fit_predict(X).astype(np.intp)


def stratified_pseudobags(phenotypes, n, rng, strict=True):
    """
    Split every phenotype stratum uniformly at random into n near-equal parts.

    Each shuffled stratum is dealt round-robin over the pseudo-bags, starting
    where the previous stratum stopped, so part sizes within a stratum differ
    by at most one and no pseudo-bag is empty when m >= n.
    """
    phenotype = np.asarray(phenotypes, dtype=np.intp)
    m = phenotype.size
    if n < 1:
        raise ValueError(f"pseudo-bag count must be at least 1, got {n}")
    if strict and m < n:
        raise BagTooSmallError(f"bag too small to divide: {m} instances for {n} pseudo-bags")

    pseudo_bag = np.empty(m, dtype=np.intp)
    start = 0
    for c in np.unique(phenotype):
        stratum = rng.permutation(np.flatnonzero(phenotype == c))
        pseudo_bag[stratum] = (start + np.arange(stratum.size)) % n
        start = (start + stratum.size) % n
    return pseudo_bag


def random_pseudobags(m, n, rng, strict=True):
    return stratified_pseudobags(np.zeros(m, dtype=np.intp), n, rng, strict=strict)


def divide(bag, cfg, rng):
    """Divide one bag into cfg.n pseudo-bags with cfg.method."""
    if cfg.method == 'random':
        phenotype = np.zeros(bag.m, dtype=np.intp)
        pseudo_bag = random_pseudobags(bag.m, cfg.n, rng, strict=cfg.strict)
        return PseudoBagPartition(bag.id, cfg.n, 1, phenotype, pseudo_bag)

    if cfg.method == 'kmeans':
        phenotype = kmeans_phenotypes(bag, cfg.l, rng)
    else:
        phenotype = initial_phenotypes(bag, cfg.l)
        if cfg.method == 'prototype_ft':
            phenotype = finetune_phenotypes(bag, phenotype, cfg.k, cfg.l)

    pseudo_bag = stratified_pseudobags(phenotype, cfg.n, rng, strict=cfg.strict)
    logger.debug("divided %s: m=%d, %d phenotypes used", bag.id, bag.m, np.unique(phenotype).size)
    return PseudoBagPartition(bag.id, cfg.n, cfg.l, phenotype, pseudo_bag)


def divide_many(bags, cfg, seed, *keys, threads=1):
    """Divide bags with streams keyed by (seed, 'divide', *keys, bag id)."""
    return Parallel(n_jobs=threads, prefer='threads')(
        delayed(divide)(bag, cfg, stream(seed, 'divide', *keys, bag.id)) for bag in bags
    )


def save_partition(partition, path):
    with open(Path(path), 'w') as f:
        json.dump(partition.to_sidecar(), f)


def load_partition(path):
    with open(Path(path)) as f:
        return PseudoBagPartition.from_sidecar(json.load(f))
