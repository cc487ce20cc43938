"""Deterministic derivation of independent random streams.

A single 64-bit master seed plus a path of labels (integers or short
strings) is hashed through the splitmix64 finalizer into the seed of a
fresh PCG64 generator.  Tasks that derive their stream from
(seed, label, index) produce identical output no matter how many worker
threads execute them or in which order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def _mix(z: int) -> int:
    # splitmix64 finalizer
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _fold(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK
    if isinstance(label, float):
        # floats keyed by their bit pattern so equal values map to equal streams
        return int(np.float64(label).view(np.uint64))
    if isinstance(label, str):
        h = 0
        for b in label.encode("utf-8"):
            h = _mix(h ^ b)
        return h
    raise TypeError(f"stream label must be int, float or str, got {type(label).__name__}")


def derive_key(seed: int, *path) -> int:
    """Collapse seed and path labels into one 64-bit stream key."""
    s = int(seed) & _MASK
    for label in path:
        s = _mix(s ^ _mix(_fold(label)))
    return s


def substream(seed: int, *path) -> np.random.Generator:
    """Independent generator for the given (seed, *path) address."""
    return np.random.Generator(np.random.PCG64(derive_key(seed, *path)))
