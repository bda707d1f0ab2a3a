"""Counter-based random streams.

Every draw is keyed by ``(seed, realization, block)`` through a
``SeedSequence`` feeding a Philox generator, so results do not depend on
thread count or on the order in which realizations are computed.
"""
from __future__ import annotations

import math

import numpy as np


def stream(seed: int, realization: int = 0, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(realization), int(block)])
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with unit variance."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * (1.0 / math.sqrt(2.0))
