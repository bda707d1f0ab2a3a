"""Two-dimensional (x, y) model with propagation along ``y``.

The angular density ``p(theta_r, theta_s)`` lives on ``[0, pi]^2`` with
``kx = kappa cos(theta)``. Since ``dkx = gamma dtheta`` the 1D PSD
``(kappa eta / 2)^2 A^2 / (gamma_r gamma_s)`` has power
``(kappa eta)^2 / (16 pi^2) * integral of A^2 dtheta_r dtheta_s``, so
``A^2 = 16 pi^2 P p / (kappa eta)^2``.

Source plane waves use ``exp(+i q.s)`` here, unlike the 3D model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ..errors import ConfigError, DomainError
from ..geometry import MediumParams
from ..spectral_support import LineGrid
from .core import ChannelRealization, _guard, as_points
from .rng import complex_normal, stream


@dataclass(frozen=True, eq=False)
class PlanarDensity:
    """Angular density on ``[0, pi]^2`` (radians), normalized to unit mass.

    ``kind`` is ``"isotropic"``, ``"piecewise"`` (``regions`` is a tuple of
    ``((tr0, tr1), (ts0, ts1))`` rectangles) or ``"function"`` (``func``).
    """

    kind: str = "isotropic"
    regions: tuple = ()
    func: Callable | None = None
    raster: int = 2048

    def __post_init__(self):
        if self.kind not in ("isotropic", "piecewise", "function"):
            raise ConfigError(f"unknown planar density {self.kind!r}")
        if self.kind == "piecewise":
            if not self.regions:
                raise DomainError("piecewise density needs at least one region")
            for (a, b), (c, d) in self.regions:
                if not (0 <= a < b <= math.pi and 0 <= c < d <= math.pi):
                    raise DomainError("planar regions must lie in [0, pi]^2")
            object.__setattr__(self, "_mass", self._union_area())
        elif self.kind == "function":
            x, w = np.polynomial.legendre.leggauss(512)
            t = 0.5 * math.pi * (x + 1)
            w = 0.5 * math.pi * w
            vals = np.asarray(self.func(t[:, None], t[None, :]), float)
            object.__setattr__(self, "_mass", float(w @ vals @ w))
        else:
            object.__setattr__(self, "_mass", math.pi**2)

    def _inside(self, tr, ts):
        tr, ts = np.broadcast_arrays(np.asarray(tr, float), np.asarray(ts, float))
        out = np.zeros(tr.shape, bool)
        for (a, b), (c, d) in self.regions:
            out |= (tr >= a) & (tr <= b) & (ts >= c) & (ts <= d)
        return out

    def _union_area(self):
        n = self.raster
        h = math.pi / n
        t = (np.arange(n) + 0.5) * h
        return float(self._inside(t[:, None], t[None, :]).sum()) * h * h

    def pdf(self, theta_r, theta_s):
        if self.kind == "isotropic":
            return np.full(np.broadcast(theta_r, theta_s).shape, 1.0 / self._mass)
        if self.kind == "piecewise":
            return np.where(self._inside(theta_r, theta_s), 1.0 / self._mass, 0.0)
        return np.asarray(self.func(theta_r, theta_s), float) / self._mass


@dataclass(frozen=True, eq=False)
class PlanarFactor:
    density: PlanarDensity
    medium: MediumParams
    target_power: float = 1.0
    gain: float = 1.0

    def on_grids(self, grid_r: LineGrid, grid_s: LineGrid) -> np.ndarray:
        m = self.medium
        p = self.density.pdf(grid_r.theta[:, None], grid_s.theta[None, :])
        return self.gain * np.sqrt(16 * math.pi**2 * self.target_power * p) / (m.kappa * m.eta)

    def scaled(self, c: float) -> "PlanarFactor":
        return replace(self, gain=self.gain * c)


def planar_average_power(factor: PlanarFactor, grid_r: LineGrid, grid_s: LineGrid) -> float:
    m = factor.medium
    A = factor.on_grids(grid_r, grid_s)
    ur = grid_r.weights / grid_r.gamma
    us = grid_s.weights / grid_s.gamma
    return (0.5 * m.kappa * m.eta) ** 2 / (2 * math.pi) ** 2 * float(ur @ (A**2) @ us)


def normalize_planar_factor(factor, grid_r, grid_s, target=1.0) -> PlanarFactor:
    p = planar_average_power(factor, grid_r, grid_s)
    if not p > 0:
        raise DomainError("cannot normalize a factor with zero power")
    return factor.scaled(math.sqrt(target / p))


@dataclass(frozen=True, eq=False)
class PlanarConfig:
    grid_receive: LineGrid
    grid_source: LineGrid
    factor: PlanarFactor
    seed: int = 0
    model: str = "scalar2d"


@dataclass(frozen=True, eq=False)
class PlanarResponse:
    values: np.ndarray
    grid_receive: LineGrid
    grid_source: LineGrid
    seed: int = 0
    realization: int = 0


def draw_planar_response(config: PlanarConfig, realization: int = 0, rng=None) -> PlanarResponse:
    gr, gs = config.grid_receive, config.grid_source
    _guard(gr.size, gs.size)
    m = gr.medium
    rng = stream(config.seed, realization, 0) if rng is None else rng
    A = config.factor.on_grids(gr, gs)
    W = complex_normal(rng, (gr.size, gs.size))
    D = np.outer(1 / np.sqrt(gr.gamma * gr.weights), 1 / np.sqrt(gs.gamma * gs.weights))
    return PlanarResponse(0.5 * m.kappa * m.eta * A * W * D, gr, gs, config.seed, realization)


def synthesize_planar(resp: PlanarResponse, sources, receivers) -> ChannelRealization:
    """``h = (2 pi)^-1 sum a_r H a_s w v`` with 2D plane waves."""
    R = as_points(receivers, 2)
    S = as_points(sources, 2)
    gr, gs = resp.grid_receive, resp.grid_source
    _guard(R.shape[0], gr.size)
    _guard(S.shape[0], gs.size)
    Br = np.exp(1j * (np.outer(R[:, 0], gr.kx) + np.outer(R[:, 1], gr.gamma))) * gr.weights
    Bs = np.exp(1j * (np.outer(S[:, 0], gs.kx) + np.outer(S[:, 1], gs.gamma))) * gs.weights
    h = (Br @ resp.values) @ Bs.T / (2 * math.pi)
    return ChannelRealization(h, R, S, resp.seed, resp.realization, meta={"model": "scalar2d"})


def synthesize_2d(config: PlanarConfig, sources, receivers, realization: int = 0) -> ChannelRealization:
    return synthesize_planar(draw_planar_response(config, realization), sources, receivers)


def planar_covariance(factor: PlanarFactor, grid_r: LineGrid, grid_s: LineGrid,
                      r1, s1, r2, s2) -> complex:
    """Model ``E{conj(h(r1, s1)) h(r2, s2)}`` by direct quadrature."""
    m = factor.medium
    A2 = factor.on_grids(grid_r, grid_s) ** 2
    dr = np.asarray(r2, float) - np.asarray(r1, float)
    ds = np.asarray(s2, float) - np.asarray(s1, float)
    er = np.exp(1j * (grid_r.kx * dr[0] + grid_r.gamma * dr[1])) * grid_r.weights / grid_r.gamma
    es = np.exp(1j * (grid_s.kx * ds[0] + grid_s.gamma * ds[1])) * grid_s.weights / grid_s.gamma
    return complex((0.5 * m.kappa * m.eta) ** 2 / (2 * math.pi) ** 2 * (er @ A2 @ es))
