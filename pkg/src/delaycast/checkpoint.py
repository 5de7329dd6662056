"""Versioned structured-text checkpoints shared by all learned models.

A checkpoint is a single JSON document: kind, config, named parameter
arrays (shape + row-major float lists), and free-form metadata. Floats are
serialized via repr and parse back bit-identically, so save/load round-trips
exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .autodiff import Tensor

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass(slots=True)
class Checkpoint:
    kind: str
    config: dict[str, Any]
    params: dict[str, np.ndarray]
    meta: dict[str, Any]


def dump_checkpoint(
    kind: str,
    config: dict[str, Any],
    params: dict[str, Tensor] | dict[str, np.ndarray],
    meta: dict[str, Any] | None = None,
) -> bytes:
    arrays = {}
    for name, p in params.items():
        arr = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=np.float64)
        arrays[name] = {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}
    doc = {
        "checkpoint_version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config,
        "params": arrays,
        "meta": meta or {},
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def load_checkpoint(data: bytes, expect_kind: str | None = None) -> Checkpoint:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"not a checkpoint: {exc}") from None
    for key in ("checkpoint_version", "kind", "config", "params", "meta"):
        if key not in doc:
            raise CheckpointError(f"checkpoint is missing field {key!r}")
    if doc["checkpoint_version"] != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint_version {doc['checkpoint_version']!r}")
    if expect_kind is not None and doc["kind"] != expect_kind:
        raise CheckpointError(f"expected a {expect_kind!r} checkpoint, found {doc['kind']!r}")
    params = {}
    for name, spec in doc["params"].items():
        arr = np.array(spec["data"], dtype=np.float64).reshape(spec["shape"])
        params[name] = arr
    return Checkpoint(kind=doc["kind"], config=doc["config"], params=params, meta=doc["meta"])


def checkpoint_id(data: bytes) -> str:
    """Short content hash used as the model id."""
    return hashlib.sha256(data).hexdigest()[:12]
