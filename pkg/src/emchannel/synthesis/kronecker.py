"""Exact sampler for separable factors on fixed point sets.

For ``A = a_r a_s^T`` the synthesized matrix is ``h = U W V^T`` with i.i.d.
``W``. Its distribution depends only on ``U U^H`` and ``V V^H``, so
``h = L_r Z L_s^T`` with ``L L^H`` those Gram matrices and ``Z`` i.i.d.
CN(0, 1) of size ``P_r x P_s`` has exactly the same law. The cost per draw
no longer depends on the number of quadrature nodes.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from ..psd import SpectralFactor
from ..spectral_support import DiskGrid
from .core import ChannelRealization, _guard, _phase_matrix, as_points
from .rng import complex_normal, stream


def psd_sqrt(C: np.ndarray) -> np.ndarray:
    """Square root ``L`` with ``L L^H = C`` for a Hermitian PSD matrix."""
    vals, vecs = np.linalg.eigh(0.5 * (C + C.conj().T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


class KroneckerSampler:
    def __init__(self, factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid,
                 receivers, sources, seed: int = 0, receive_branch: int = 1,
                 source_branch: int = 1, block: int = 0):
        parts = factor.separable_parts(grid_r, grid_s)
        if parts is None:
            raise ConfigError("the Kronecker sampler needs a separable factor")
        m = grid_r.medium
        self.receivers = as_points(receivers)
        self.sources = as_points(sources)
        _guard(self.receivers.shape[0], grid_r.size)
        _guard(self.sources.shape[0], grid_s.size)
        self.seed = int(seed)
        self.block = int(block)
        c = 0.5 * m.kappa * m.eta / (2 * math.pi) ** 2
        U = _phase_matrix(grid_r, self.receivers, +1, receive_branch) \
            * (c * parts[0] * np.sqrt(grid_r.weights / grid_r.gamma))
        V = _phase_matrix(grid_s, self.sources, -1, source_branch) \
            * (parts[1] * np.sqrt(grid_s.weights / grid_s.gamma))
        self.cov_receive = U @ U.conj().T
        self.cov_source = V @ V.conj().T
        self.L_r = psd_sqrt(self.cov_receive)
        self.L_s = psd_sqrt(self.cov_source)

    def draw(self, realization: int = 0) -> ChannelRealization:
        Z = complex_normal(stream(self.seed, realization, self.block), (self.L_r.shape[1], self.L_s.shape[1]))
        h = self.L_r @ Z @ self.L_s.T
        return ChannelRealization(h, self.receivers, self.sources, self.seed, realization,
                                  meta={"engine": "kronecker"})

    def covariance(self, i, j, k, l):
        """Model value of ``E{conj(h[i, j]) h[k, l]}``."""
        return complex(self.cov_receive[k, i] * self.cov_source[l, j])


class CompleteKroneckerSampler:
    """Exact sampler for the complete model with a separable factor.

    The four blocks are independent, so ``h`` is a sum of four independent
    Kronecker draws, each on its own block stream.
    """

    def __init__(self, factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid,
                 receivers, sources, block_gains, seed: int = 0):
        from .complete import BLOCKS

        g = np.asarray(block_gains, float).ravel()
        self.seed = int(seed)
        self.samplers = []
        for b, ((_, rb, sb), gain) in enumerate(zip(BLOCKS, g)):
            if gain == 0.0:
                continue
            f = factor if gain == 1.0 else factor.scaled(math.sqrt(gain))
            self.samplers.append(KroneckerSampler(f, grid_r, grid_s, receivers, sources, seed,
                                                  rb, sb, block=b))
        if not self.samplers:
            raise ConfigError("complete model has no active block")

    def draw(self, realization: int = 0) -> ChannelRealization:
        out = self.samplers[0].draw(realization)
        for s in self.samplers[1:]:
            out.h[...] += s.draw(realization).h
        return out

    def covariance(self, i, j, k, l):
        return sum(s.covariance(i, j, k, l) for s in self.samplers)
