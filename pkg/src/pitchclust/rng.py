"""Deterministic random-stream derivation.

All randomness in the package flows from one master seed. Every component
gets its own stream derived as SHA-256 of (master seed, *tokens), so runs
are reproducible bit-for-bit and independent jobs can execute in any order
(or in parallel) without sharing generator state.
"""

import hashlib

import numpy as np


def derive_seed(master_seed, *tokens):
    """Map (master_seed, *tokens) to a stable 64-bit integer seed."""
    key = "\x1f".join(str(t) for t in (master_seed, *tokens))
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(master_seed, *tokens):
    """Independent numpy Generator for the component named by ``tokens``."""
    return np.random.default_rng(derive_seed(master_seed, *tokens))
