"""Deterministic derivation of per-stage random sources from one run seed.

Each stochastic stage gets its own numpy Generator keyed by a string label,
so reordering or re-running stages never perturbs another stage's stream.
Python's salted ``hash`` is unusable here; we go through sha256.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for stage `label` of run `seed`."""
    return np.random.Generator(np.random.PCG64(substream_seed(seed, label)))
