"""Deterministic named RNG substreams derived from one master seed.

Every random decision in the pipeline (fold split, SMOTE, per-tree
bootstraps, MLP init) draws from its own named child stream, so any
sub-component can be replayed in isolation and results do not depend on
execution order or thread count.  Python's built-in ``hash`` is salted per
process, so stream names are mixed in through SHA-256 instead.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def substream_seed(master_seed: int, *parts: int | str) -> int:
    """Map (master seed, name parts) to a stable 64-bit child seed.

    The same arguments always produce the same seed, across processes and
    platforms.
    """
    key = ":".join([str(int(master_seed) & _MASK64)] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little", signed=False)


def substream(master_seed: int, *parts: int | str) -> np.random.Generator:
    """A numpy Generator seeded from the named child stream."""
    return np.random.default_rng(substream_seed(master_seed, *parts))
