"""Counter-based random streams with reproducible substream derivation.

Streams are Philox generators keyed by (master_seed, *labels).  Distinct
label tuples give statistically independent substreams; identical tuples
give identical streams across runs, platforms and thread counts.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_to_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFFFFFFFFFF
    if isinstance(label, str):
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream label must be int or str, got {type(label)!r}")


def derive_rng(master_seed: int, *labels) -> np.random.Generator:
    """Independent substream keyed by (master_seed, labels...)."""
    key = tuple(_label_to_int(l) for l in labels)
    ss = np.random.SeedSequence(int(master_seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
