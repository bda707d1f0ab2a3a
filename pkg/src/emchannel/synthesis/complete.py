"""Complete model with up- and downgoing plane waves on both sides.

Four independent blocks ``++, +-, -+, --`` (receive branch, source branch)
each carry ``sqrt(g) * A`` for a non-negative 2x2 gain matrix ``g``. Block
``++`` draws from the same random stream as the scalar model, so a gain
matrix with only ``g[0][0] = 1`` reproduces the scalar synthesis bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .core import (AngularResponseGrid, ChannelRealization, SynthesisConfig,
                   draw_angular_response, synthesize)

BLOCKS = (("++", 1, 1), ("+-", 1, -1), ("-+", -1, 1), ("--", -1, -1))


@dataclass(frozen=True, eq=False)
class CompleteResponseGrid:
    blocks: dict

    def __getitem__(self, name):
        return self.blocks[name]


def _gains(config):
    g = np.asarray(config.block_gains, dtype=float)
    if g.shape != (2, 2) or not np.all(np.isfinite(g)):
        raise ConfigError("block_gains must be a 2x2 matrix")
    if np.any(g < 0):
        raise ConfigError("block gains must be non-negative")
    if not g.sum() > 0:
        raise ConfigError("at least one block gain must be positive")
    return g.ravel()


def draw_complete_response(config: SynthesisConfig, realization: int = 0) -> CompleteResponseGrid:
    blocks = {}
    for b, ((name, _, _), g) in enumerate(zip(BLOCKS, _gains(config))):
        if g == 0.0:
            blocks[name] = None
            continue
        factor = config.factor if g == 1.0 else config.factor.scaled(math.sqrt(g))
        blocks[name] = draw_angular_response(config, realization=realization, block=b,
                                             factor=factor)
    return CompleteResponseGrid(blocks)


def synthesize_complete_grid(complete: CompleteResponseGrid, sources, receivers) -> ChannelRealization:
    out = None
    for name, rb, sb in BLOCKS:
        resp: AngularResponseGrid | None = complete.blocks.get(name)
        if resp is None:
            continue
        part = synthesize(resp, sources, receivers, receive_branch=rb, source_branch=sb)
        if out is None:
            out = part
        else:
            out.h[...] += part.h
    if out is None:
        raise ConfigError("complete model has no active block")
    return out


def synthesize_complete(config: SynthesisConfig, sources, receivers,
                        realization: int = 0) -> ChannelRealization:
    """Draw and synthesize one realization of the complete model."""
    return synthesize_complete_grid(draw_complete_response(config, realization), sources, receivers)
