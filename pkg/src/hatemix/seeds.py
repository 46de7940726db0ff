"""Deterministic sub-seed derivation.

Every source of randomness in a run (embedding init, weight init, dropout,
fold shuffling) draws from a sub-seed derived from the single master seed,
so whole runs are reproducible from one integer and independent stages do
not perturb each other's streams.
"""

import hashlib


def derive_seed(master: int, label: str) -> int:
    """Derive a stable 64-bit sub-seed from a master seed and a stage label."""
    digest = hashlib.sha256(f"{master}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
