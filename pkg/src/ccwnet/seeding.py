"""Deterministic seed derivation for nested, parallel-safe RNG streams.

Every stochastic stage (population draw, external summary, split, each grid
cell's init and shuffle, each replicate) gets its own stream derived from a
master seed plus string/integer tags.  Derivation hashes with SHA-256, not
Python's ``hash``, so streams are identical across processes, platforms and
interpreter runs — replications scheduled on any number of workers reproduce
bit-for-bit.

The generator itself is numpy's default PCG64.
"""

import hashlib

import numpy as np

__all__ = ["derive_seed", "rng_from"]


def derive_seed(*parts: int | str) -> int:
    """Fold integer/string tags into a stable 64-bit seed."""
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, str):
            h.update(b"s:")
            h.update(part.encode("utf-8"))
        elif isinstance(part, (int, np.integer)):
            h.update(b"i:")
            h.update(int(part).to_bytes(16, "little", signed=True))
        else:
            raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")
        h.update(b";")
    return int.from_bytes(h.digest()[:8], "little")


def rng_from(*parts: int | str) -> np.random.Generator:
    """PCG64 generator seeded by :func:`derive_seed` of the given tags."""
    return np.random.default_rng(derive_seed(*parts))
