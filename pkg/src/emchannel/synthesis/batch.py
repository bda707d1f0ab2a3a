"""Batches of realizations with a choice of engine and worker count.

Every realization draws from its own ``(seed, realization, block)`` stream,
so the output does not depend on the number of threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from ..errors import ConfigError
from .complete import synthesize_complete
from .core import SynthesisConfig, config_hash, synthesize_realization
from .kronecker import CompleteKroneckerSampler, KroneckerSampler

ENGINES = ("auto", "direct", "kronecker")


def choose_engine(config: SynthesisConfig, engine: str = "auto") -> str:
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}")
    separable = config.factor.separable_parts(config.grid_receive, config.grid_source) is not None
    eligible = config.model in ("scalar3d", "complete3d") and separable \
        and not config.enforce_reciprocity
    if engine == "kronecker" and not eligible:
        raise ConfigError("the Kronecker engine needs a separable 3D model without reciprocity")
    if engine == "auto":
        return "kronecker" if eligible else "direct"
    return engine


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def generate(config: SynthesisConfig, sources, receivers, n_realizations: int,
             engine: str = "auto", threads: int | None = None, start: int = 0,
             tag=None) -> list:
    """Return realizations ``start .. start + n_realizations - 1`` in order."""
    if int(n_realizations) < 1:
        raise ConfigError("n_realizations must be at least 1")
    engine = choose_engine(config, engine)
    threads = default_threads() if threads is None else max(1, int(threads))
    digest = config_hash(tag) if tag is not None else ""
    idx = range(int(start), int(start) + int(n_realizations))

    if engine == "kronecker" and config.model == "complete3d":
        sampler = CompleteKroneckerSampler(config.factor, config.grid_receive, config.grid_source,
                                           receivers, sources, config.block_gains, seed=config.seed)
        one = sampler.draw
    elif engine == "kronecker":
        sampler = KroneckerSampler(config.factor, config.grid_receive, config.grid_source,
                                   receivers, sources, seed=config.seed)
        one = sampler.draw
    elif config.model == "complete3d":
        def one(i):
            return synthesize_complete(config, sources, receivers, realization=i)
    else:
        def one(i):
            return synthesize_realization(config, sources, receivers, realization=i)

    if threads == 1:
        out = [one(i) for i in idx]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, idx))
    for r in out:
        object.__setattr__(r, "config_hash", digest)
        r.meta.setdefault("engine", engine)
    return out
