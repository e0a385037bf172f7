"""
Keyed random streams.

Every random draw in the package comes from a generator returned by
``stream``, so a result depends only on the global seed and the purpose
and identity keys of the draw, never on call order across bags or threads.
"""
import hashlib

import numpy as np


def _key_entropy(key):
    digest = hashlib.blake2b(repr(key).encode('utf-8'), digest_size=8).digest()
    return int.from_bytes(digest, 'little')


def stream(seed, *keys):
    """Return a generator for ``seed`` refined by ``keys`` (str, int or float)."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    entropy = [int(seed)] + [_key_entropy(key) for key in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def child_seed(rng):
    """Draw a 32-bit seed from ``rng`` for libraries that take an integer seed."""
    return int(rng.integers(0, 2**32 - 1))
