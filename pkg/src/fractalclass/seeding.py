"""Deterministic seed derivation from a root seed and string/int keys."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, *keys) -> int:
    """64-bit seed derived from ``root`` and an arbitrary key path.

    The same ``(root, keys)`` always gives the same seed; different key paths
    give independent streams.
    """
    h = hashlib.sha256(str(int(root)).encode())
    for key in keys:
        h.update(b"\x1f" + str(key).encode())
    return int.from_bytes(h.digest()[:8], "little")


def derive_rng(root: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *keys))
