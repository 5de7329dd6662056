"""Deterministic random streams.

Every stochastic component draws from a generator obtained through
:func:`stream`, which derives an independent child stream from a root seed
and a path of string labels. The splitting rule is fixed: each label is
hashed (SHA-256, first 8 bytes) into an integer, and the root seed plus the
label hashes form the entropy of a ``numpy.random.SeedSequence``. Identical
(seed, path) pairs therefore yield bit-identical streams on every platform,
and sibling streams are statistically independent.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def stream(seed: int, *path: str) -> np.random.Generator:
    """Return the child generator identified by ``(seed, *path)``."""
    keys = [_label_key(p) for p in path]
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, *keys]))
