"""
Bag and dataset representation plus the PSMX bag file format.

A PSMX file holds one bag's feature matrix: a 20-byte header followed by
m*d little-endian float32 values in row-major order. Labels and split tags
live in the dataset manifest so one feature file can serve several tasks.
"""
import json
import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

logger = logging.getLogger(__name__)

MAGIC = b'PSMX'
VERSION = 1
DTYPE_F32 = 0
# magic, version, flags, m, d, dtype, reserved; flags and reserved are zero
HEADER = struct.Struct('<4sHHIIB3s')
RESERVED = bytes(3)
PAYLOAD_DTYPE = np.dtype('<f4')

SPLITS = ('train', 'val', 'test')


class BagFormatError(ValueError):
    """A PSMX file could not be decoded."""


class BadMagicError(BagFormatError):
    pass


class VersionMismatchError(BagFormatError):
    pass


class TruncatedPayloadError(BagFormatError):
    """Header or payload length disagrees with the declared m*d."""


class NonFiniteValuesError(BagFormatError):
    pass


class DatasetError(ValueError):
    """A manifest references bags that do not form a valid dataset."""


class MissingBagFileError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class LabelOutOfRangeError(DatasetError):
    pass


@dataclass(frozen=True, eq=False)
class Bag:
    """An m x d matrix of instance features with a class label."""
    id: str
    features: np.ndarray
    label: int = 0

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float32, copy=True)
        if features.ndim != 2:
            raise ValueError(f"bag {self.id}: features must be 2-D, got shape {features.shape}")
        if features.shape[0] < 1 or features.shape[1] < 1:
            raise ValueError(f"bag {self.id}: needs m >= 1 and d >= 1, got shape {features.shape}")
        if not np.isfinite(features).all():
            raise NonFiniteValuesError(f"bag {self.id}: non-finite feature values")
        if self.label < 0:
            raise ValueError(f"bag {self.id}: negative label {self.label}")
        features.flags.writeable = False
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'label', int(self.label))

    @property
    def m(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    def matrix(self):
        """Features as a float64 array; all downstream arithmetic is 64-bit."""
        return self.features.astype(np.float64)

    def with_label(self, label):
        return replace(self, label=label)

    def __eq__(self, other):
        if not isinstance(other, Bag):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and self.features.shape == other.features.shape
            and self.features.tobytes() == other.features.tobytes()
        )

    def __hash__(self):
        return hash((self.id, self.label, self.features.shape))

    def __repr__(self):
        return f"Bag(id={self.id!r}, m={self.m}, d={self.d}, label={self.label})"


@dataclass(frozen=True)
class SoftLabel:
    """A probability vector over C classes; one-hot labels are the degenerate case."""
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64, copy=True)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError(f"soft label must be a non-empty vector, got shape {probs.shape}")
        if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"soft label must be non-negative and sum to 1, got {probs}")
        probs.flags.writeable = False
        object.__setattr__(self, 'probs', probs)

    @classmethod
    def one_hot(cls, label, num_classes):
        if not 0 <= label < num_classes:
            raise ValueError(f"label {label} out of range for {num_classes} classes")
        probs = np.zeros(num_classes)
        probs[label] = 1.0
        return cls(probs)

    @property
    def num_classes(self):
        return self.probs.size

    def argmax(self):
        return int(np.argmax(self.probs))

    def tolist(self):
        return [float(p) for p in self.probs]

    def __eq__(self, other):
        if not isinstance(other, SoftLabel):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class Dataset:
    """Bags sharing one feature dimension, each tagged with a split."""
    bags: tuple
    num_classes: int
    dim: int
    splits: tuple = field(default=())

    def __post_init__(self):
        bags = tuple(self.bags)
        splits = tuple(self.splits) if self.splits else ('train',) * len(bags)
        if len(splits) != len(bags):
            raise DatasetError(f"{len(bags)} bags but {len(splits)} split tags")
        unknown = sorted(set(splits) - set(SPLITS))
        if unknown:
            raise DatasetError(f"unknown split tags: {', '.join(unknown)}")
        seen = set()
        for bag in bags:
            if bag.id in seen:
                raise DatasetError(f"duplicate bag id {bag.id!r}")
            seen.add(bag.id)
            if bag.d != self.dim:
                raise DimensionMismatchError(f"bag {bag.id}: d={bag.d}, dataset dim={self.dim}")
            if bag.label >= self.num_classes:
                raise LabelOutOfRangeError(
                    f"bag {bag.id}: label {bag.label} >= num_classes {self.num_classes}"
                )
        object.__setattr__(self, 'bags', bags)
        object.__setattr__(self, 'splits', splits)

    def __len__(self):
        return len(self.bags)

    def split(self, name):
        """Bags tagged ``name``, in manifest order."""
        return [bag for bag, tag in zip(self.bags, self.splits) if tag == name]

    def replace_split(self, name, bags):
        """Return a dataset whose ``name`` split is replaced, order preserved."""
        replacement = iter(bags)
        merged = [next(replacement) if tag == name else bag for bag, tag in zip(self.bags, self.splits)]
        return replace(self, bags=tuple(merged))


def save_bag(bag, path):
    """Write ``bag.features`` as a PSMX file."""
    path = Path(path)
    payload = np.ascontiguousarray(bag.features, dtype=PAYLOAD_DTYPE)
    header = HEADER.pack(MAGIC, VERSION, 0, bag.m, bag.d, DTYPE_F32, RESERVED)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(payload.tobytes(order='C'))
    logger.debug("wrote %s (m=%d, d=%d)", path, bag.m, bag.d)


def load_bag(path, bag_id=None, label=0):
    """Read a PSMX file. The bag id defaults to the file stem."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) or raw[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a PSMX file")
    if len(raw) < HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated ({len(raw)} bytes)")
    _, version, flags, m, d, dtype, reserved = HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    if flags != 0:
        raise BagFormatError(f"{path}: flags must be 0, got {flags}")
    if dtype != DTYPE_F32:
        raise BagFormatError(f"{path}: unsupported dtype code {dtype}")
    if reserved != RESERVED:
        raise BagFormatError(f"{path}: reserved header bytes must be zero, got {reserved.hex()}")
    expected = m * d * PAYLOAD_DTYPE.itemsize
    actual = len(raw) - HEADER.size
    if actual != expected:
        raise TruncatedPayloadError(
            f"{path}: declared {m}x{d} needs {expected} payload bytes, found {actual}"
        )
    features = np.frombuffer(raw, dtype=PAYLOAD_DTYPE, offset=HEADER.size).reshape(m, d)
    if not np.isfinite(features).all():
        raise NonFiniteValuesError(f"{path}: non-finite feature values")
    return Bag(id=bag_id if bag_id is not None else path.stem, features=features, label=label)


def _manifest_entries(manifest, path):
    for key in ('num_classes', 'dim', 'bags'):
        if key not in manifest:
            raise DatasetError(f"{path}: manifest missing '{key}'")
    for entry in manifest['bags']:
        missing = [key for key in ('id', 'path', 'label', 'split') if key not in entry]
        if missing:
            raise DatasetError(f"{path}: bag entry {entry!r} missing {', '.join(missing)}")
    return manifest['bags']


def load_dataset(manifest_path, threads=1):
    """Load and validate every bag a manifest references."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as f:
        manifest = json.load(f)
    entries = _manifest_entries(manifest, manifest_path)
    num_classes, dim = int(manifest['num_classes']), int(manifest['dim'])

    def load_entry(entry):
        bag_path = manifest_path.parent / entry['path']
        if not bag_path.is_file():
            raise MissingBagFileError(f"bag {entry['id']}: missing file {bag_path}")
        bag = load_bag(bag_path, bag_id=entry['id'])
        if bag.d != dim:
            raise DimensionMismatchError(f"bag {entry['id']}: d={bag.d}, manifest dim={dim}")
        label = int(entry['label'])
        if not 0 <= label < num_classes:
            raise LabelOutOfRangeError(f"bag {entry['id']}: label {label} out of [0, {num_classes})")
        return bag.with_label(label)

    bags = Parallel(n_jobs=threads, prefer='threads')(delayed(load_entry)(entry) for entry in entries)
    dataset = Dataset(
        bags=tuple(bags),
        num_classes=num_classes,
        dim=dim,
        splits=tuple(entry['split'] for entry in entries),
    )
    logger.info("loaded %d bags from %s", len(dataset), manifest_path)
    return dataset


def write_dataset(dataset, out_dir, subdir='bags'):
    """Write every bag as PSMX plus ``manifest.json``; returns the manifest path."""
    out_dir = Path(out_dir)
    (out_dir / subdir).mkdir(parents=True, exist_ok=True)
    entries = []
    for bag, split in zip(dataset.bags, dataset.splits):
        relative = f"{subdir}/{bag.id}.psmx"
        save_bag(bag, out_dir / relative)
        entries.append({'id': bag.id, 'path': relative, 'label': bag.label, 'split': split})
    manifest_path = out_dir / 'manifest.json'
    with open(manifest_path, 'w') as f:
        json.dump({'num_classes': dataset.num_classes, 'dim': dataset.dim, 'bags': entries}, f, indent=2)
    logger.info("wrote %d bags to %s", len(entries), out_dir)
    return manifest_path
