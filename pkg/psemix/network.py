"""
Attention-MIL classifier with analytic gradients.

For a bag X (m x d):

    E = relu(X W1 + b1)          instance embeddings, m x h
    s = tanh(E V) w              attention scores, m
    a = softmax(s)               attention weights
    z = a E                      bag embedding, h
    p = softmax(z W2 + b2)       class probabilities, C

Training is plain SGD with one bag (or augmented sample) per step and a
soft-target cross-entropy loss.
"""
import json
import logging
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import metrics
from .bagstore import SoftLabel
from .division import DivisionConfig, divide_many
from .mixing import (
    DividedBag,
    MixConfig,
    augment_epoch,
    draw_pairs,
    instancemix,
    mixup_interpolate,
    raw_sample,
)
from .seeding import stream
from .validation import ConfigValidator, check

logger = logging.getLogger(__name__)

PARAM_NAMES = ('W1', 'b1', 'V', 'w', 'W2', 'b2')
CHECKPOINT_FORMAT = 'psemix-mil-checkpoint/1'
HEADER_LENGTH = struct.Struct('<I')


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, step, sample_id, value):
        super().__init__(
            f"non-finite loss {value} at epoch {epoch}, step {step}, sample {sample_id}"
        )
        self.epoch = epoch
        self.step = step
        self.sample_id = sample_id


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 50
    patience: int = 10
    seed: int = 0
    augment: str = 'none'
    hidden: int = 64
    attention: int = 32
    label_corruption: float = 0.0
    mixing: MixConfig = field(default_factory=MixConfig)
    division: DivisionConfig = field(default_factory=DivisionConfig)

    def __post_init__(self):
        check(ConfigValidator.validate_train(self))

    def to_dict(self):
        return asdict(self)


@dataclass
class MilParams:
    W1: np.ndarray
    b1: np.ndarray
    V: np.ndarray
    w: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def init(cls, dim, num_classes, rng, hidden=64, attention=32):
        def glorot(fan_in, fan_out, shape):
            return rng.standard_normal(shape) * math.sqrt(2.0 / (fan_in + fan_out))

        return cls(
            W1=glorot(dim, hidden, (dim, hidden)),
            b1=np.zeros(hidden),
            V=glorot(hidden, attention, (hidden, attention)),
            w=glorot(attention, 1, (attention,)),
            W2=glorot(hidden, num_classes, (hidden, num_classes)),
            b2=np.zeros(num_classes),
        )

    @classmethod
    def zeros_like(cls, other):
        return cls(**{name: np.zeros_like(getattr(other, name)) for name in PARAM_NAMES})

    def arrays(self):
        return [getattr(self, name) for name in PARAM_NAMES]

    def shapes(self):
        return {name: list(getattr(self, name).shape) for name in PARAM_NAMES}

    def copy(self):
        return MilParams(*[array.copy() for array in self.arrays()])

    def all_finite(self):
        return all(np.isfinite(array).all() for array in self.arrays())

    def sgd_step(self, grads, lr):
        return MilParams(*[p - lr * g for p, g in zip(self.arrays(), grads.arrays())])

    @property
    def num_classes(self):
        return self.b2.size

    def __eq__(self, other):
        if not isinstance(other, MilParams):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))


@dataclass(frozen=True)
class ForwardCache:
    X: np.ndarray
    pre: np.ndarray
    E: np.ndarray
    T: np.ndarray
    attention: np.ndarray
    z: np.ndarray
    probs: np.ndarray


@dataclass
class TrainResult:
    best: MilParams
    last: MilParams
    history: pd.DataFrame
    best_epoch: int


def _softmax(x):
    shifted = np.exp(x - np.max(x))
    return shifted / shifted.sum()


def forward(params, features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"forward needs an m x d matrix with m >= 1, got shape {X.shape}")
    pre = X @ params.W1 + params.b1
    E = np.maximum(pre, 0.0)
    T = np.tanh(E @ params.V)
    attention = _softmax(T @ params.w)
    z = attention @ E
    probs = _softmax(z @ params.W2 + params.b2)
    return probs, attention, ForwardCache(X, pre, E, T, attention, z, probs)


def loss(probs, target):
    target = target.probs if isinstance(target, SoftLabel) else target
    return metrics.cross_entropy(probs, target)


def backward(params, cache, target):
    target = target.probs if isinstance(target, SoftLabel) else np.asarray(target)
    d_logits = cache.probs - target

    dW2 = np.outer(cache.z, d_logits)
    db2 = d_logits
    dz = params.W2 @ d_logits

    # z = a E
    dE = np.outer(cache.attention, dz)
    d_attention = cache.E @ dz
    # softmax Jacobian
    ds = cache.attention * (d_attention - cache.attention @ d_attention)

    # s = tanh(E V) w
    dw = cache.T.T @ ds
    dU = np.outer(ds, params.w) * (1.0 - cache.T ** 2)
    dV = cache.E.T @ dU
    dE += dU @ params.V.T

    # E = relu(X W1 + b1)
    d_pre = dE * (cache.pre > 0)
    dW1 = cache.X.T @ d_pre
    db1 = d_pre.sum(axis=0)

    return MilParams(W1=dW1, b1=db1, V=dV, w=dw, W2=dW2, b2=db2)


def predict(params, bag):
    features = bag.matrix() if hasattr(bag, 'matrix') else bag.features
    probs, _, _ = forward(params, features)
    return SoftLabel(probs / probs.sum())


def predict_many(params, bags, threads=1):
    """Class probabilities for each bag, one row per bag, in input order."""
    rows = Parallel(n_jobs=threads, prefer='threads')(
        delayed(lambda bag: predict(params, bag).probs)(bag) for bag in bags
    )
    return np.asarray(rows).reshape(len(rows), params.num_classes)


def evaluate(params, bags, num_classes, threads=1):
    probs = predict_many(params, bags, threads)
    return metrics.summarize(probs, [bag.label for bag in bags], num_classes)


def epoch_stream(train_bags, cfg, epoch, num_classes, threads=1):
    """Training samples for one epoch under cfg.augment."""
    if cfg.augment == 'none':
        order = stream(cfg.seed, 'shuffle', epoch).permutation(len(train_bags))
        return [raw_sample(train_bags[i], num_classes) for i in order]

    if cfg.augment == 'psemix':
        partitions = divide_many(train_bags, cfg.division, cfg.seed, epoch, threads=threads)
        divided = [DividedBag(bag, part) for bag, part in zip(train_bags, partitions)]
        return augment_epoch(divided, cfg.mixing, stream(cfg.seed, 'pair', epoch), num_classes)

    baseline = mixup_interpolate if cfg.augment == 'mixup' else instancemix
    rng = stream(cfg.seed, 'pair', epoch)
    return [
        baseline(train_bags[a], train_bags[b], cfg.mixing.alpha, rng, num_classes)
        for a, b in draw_pairs(len(train_bags), rng)
    ]


def train(dataset, cfg, threads=1):
    """
    SGD over the augmented training stream with early stopping on validation loss.

    Returns the parameters at the minimum validation loss, the parameters of
    the last epoch run and the per-epoch metric history.
    """
    num_classes = dataset.num_classes
    train_bags = dataset.split('train')
    val_bags = dataset.split('val')
    test_bags = dataset.split('test')
    if len(train_bags) < 2 and cfg.augment != 'none':
        raise ValueError(f"augmentation '{cfg.augment}' needs at least two training bags")
    if not val_bags:
        logger.warning("no validation split; model selection falls back to the training split")
        val_bags = train_bags

    params = MilParams.init(
        dataset.dim, num_classes, stream(cfg.seed, 'init'), hidden=cfg.hidden, attention=cfg.attention,
    )
    best, best_epoch, best_loss, stale = params.copy(), 0, math.inf, 0
    rows = []

    for epoch in range(1, cfg.epochs + 1):
        samples = epoch_stream(train_bags, cfg, epoch, num_classes, threads)
        step_losses = []
        for step, sample in enumerate(samples):
            probs, _, cache = forward(params, sample.features)
            value = loss(probs, sample.label)
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, step, sample.id, value)
            params = params.sgd_step(backward(params, cache, sample.label), cfg.lr)
            if not params.all_finite():
                raise TrainingDivergedError(epoch, step, sample.id, 'in parameters')
            step_losses.append(value)

        train_report = evaluate(params, train_bags, num_classes, threads)
        val_report = evaluate(params, val_bags, num_classes, threads)
        row = {
            'epoch': epoch,
            'stream_loss': float(np.mean(step_losses)) if step_losses else math.nan,
            'train_loss': train_report.ce_loss,
            'train_auc': train_report.auc,
            'val_loss': val_report.ce_loss,
            'val_auc': val_report.auc,
        }
        if test_bags:
            test_report = evaluate(params, test_bags, num_classes, threads)
            row.update(test_loss=test_report.ce_loss, test_auc=test_report.auc)
        rows.append(row)
        logger.info(
            "epoch %d: stream %.4f, train %.4f, val %.4f (auc %.3f)",
            epoch, row['stream_loss'], row['train_loss'], row['val_loss'], row['val_auc'],
        )

        if val_report.ce_loss < best_loss:
            best, best_epoch, best_loss, stale = params.copy(), epoch, val_report.ce_loss, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("early stop at epoch %d, best epoch %d", epoch, best_epoch)
                break

    return TrainResult(best=best, last=params, history=pd.DataFrame(rows), best_epoch=best_epoch)


def save_checkpoint(params, path, config=None):
    """JSON header (shapes, config) followed by the f64 little-endian parameter blob."""
    header = json.dumps({
        'format': CHECKPOINT_FORMAT,
        'order': list(PARAM_NAMES),
        'shapes': params.shapes(),
        'config': config or {},
    }, sort_keys=True).encode('utf-8')
    blob = b''.join(np.ascontiguousarray(a, dtype='<f8').tobytes() for a in params.arrays())
    with open(Path(path), 'wb') as f:
        f.write(HEADER_LENGTH.pack(len(header)))
        f.write(header)
        f.write(blob)


def load_checkpoint(path):
    """Return (params, config) from a checkpoint file."""
    raw = Path(path).read_bytes()
    (length,) = HEADER_LENGTH.unpack_from(raw)
    header = json.loads(raw[HEADER_LENGTH.size:HEADER_LENGTH.size + length].decode('utf-8'))
    if header.get('format') != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    offset = HEADER_LENGTH.size + length
    arrays = {}
    for name in header['order']:
        shape = tuple(header['shapes'][name])
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(raw, dtype='<f8', count=count, offset=offset).reshape(shape).copy()
        offset += count * 8
    if offset != len(raw):
        raise ValueError(f"{path}: {len(raw) - offset} trailing bytes after the parameter blob")
    return MilParams(**arrays), header['config']
