"""Deterministic random streams.

Every random draw in the package flows from one integer seed expanded by
numpy's SeedSequence (a documented splitmix64-style hash expansion).  Each
component passes a short text label, so independent consumers of the same
user seed get independent, platform-stable streams.
"""

from __future__ import annotations

import numpy as np


def spawn_generator(seed: int, label: str = "") -> np.random.Generator:
    """PCG64 generator for (seed, label); identical inputs, identical stream."""
    key = tuple(label.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
