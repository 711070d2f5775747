"""Named seed derivation: one root seed fans out to per-purpose streams."""

from __future__ import annotations

import hashlib

import numpy as np


def child_seed(root: int, purpose: str) -> int:
    """Derive a 64-bit seed from (root, purpose); stable across platforms."""
    digest = hashlib.sha256(f"{root}:{purpose}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(root: int, purpose: str) -> np.random.Generator:
    """A generator whose stream depends only on the root seed and label."""
    return np.random.default_rng(child_seed(root, purpose))
