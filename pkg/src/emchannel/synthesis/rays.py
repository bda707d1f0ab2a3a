"""Finite sums of plane-wave pairs (ray model).

Each ray ``j`` links a source direction to a receive direction with power
gain ``Gamma_j``; within one realization it carries a uniform random phase:

    h(r, s) = sum_j sqrt(Gamma_j) exp(i psi_j) exp(i k_j.r) exp(-i q_j.s)

so ``E|h|^2 = 1`` and ``|h| <= sum_j sqrt(Gamma_j)``.
"""
from __future__ import annotations

import math

import numpy as np

from ..angular import Discrete
from ..errors import ConfigError
from ..geometry import MediumParams
from .core import ChannelRealization, _guard, as_points
from .rng import stream


def synthesize_rays(dist: Discrete, sources, receivers, medium: MediumParams,
                    seed: int = 0, realization: int = 0, random_phase: bool = True) -> ChannelRealization:
    if not dist.paired:
        raise ConfigError("ray synthesis needs (receive, source) direction pairs")
    R = as_points(receivers)
    S = as_points(sources)
    n = dist.gains.size
    _guard(R.shape[0], n)
    _guard(S.shape[0], n)
    k = medium.kappa * dist.directions[:, 0]
    q = medium.kappa * dist.directions[:, 1]
    if random_phase:
        psi = 2 * math.pi * stream(seed, realization, 7).random(n)
    else:
        psi = np.zeros(n)
    amp = np.sqrt(dist.gains) * np.exp(1j * psi)
    Br = np.exp(1j * (R @ k.T)) * amp
    Bs = np.exp(-1j * (S @ q.T))
    return ChannelRealization(Br @ Bs.T, R, S, seed, realization, meta={"model": "rays"})
