"""Spectral factors, power spectral density, power and the Mercer bound.

Conventions
-----------
The 4D PSD on the product of disks is ``S = (kappa eta / 2)^2 A^2 / (gamma_r gamma_s)``
and the average power is ``P = (2 pi)^-4 * integral of S``. Mapping each disk to the
hemisphere gives ``dk / gamma = kappa dOmega``, hence

    P = kappa^4 eta^2 / (64 pi^4) * integral of A^2 dOmega_r dOmega_s.

A separable factor built from two unit-mass angular densities therefore uses
``A^2 = 64 pi^4 P p_r p_s / (kappa^4 eta^2)``. For isotropic densities
(``1/(2 pi)`` each) this is ``A^2 = 16 pi^2 P / (kappa^4 eta^2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .angular import AngularDistribution, Discrete, Isotropic, hemisphere_quadrature
from .errors import ConfigError, DomainError, ResourceLimitError
from .geometry import MediumParams
from .spectral_support import DiskGrid

MAX_COUPLED_ENTRIES = 2**28


def spherical_power_constant(medium: MediumParams) -> float:
    """``C`` in ``P = C * integral of A^2 over both hemispheres``."""
    return medium.kappa**4 * medium.eta**2 / (64.0 * math.pi**4)


def isotropic_spectral_factor(medium: MediumParams) -> float:
    """Amplitude ``A`` with ``A^2 = 2 pi^2 / kappa`` (delta-on-sphere convention).

    This constant belongs to the impulsive 6D spectral density. Used in the
    4D PSD it does not give unit power; see :class:`IsotropicClosedForm`.
    """
    return math.sqrt(2.0 * math.pi**2 / medium.kappa)


def _dirs(kx, ky, medium):
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    q = medium.kappa**2 - kx**2 - ky**2
    if np.any(q <= 0):
        raise DomainError("wavenumber on or outside the rim of the disk")
    return np.stack(np.broadcast_arrays(kx, ky, np.sqrt(q)), axis=-1) / medium.kappa


class SpectralFactor:
    """Non-negative amplitude ``A(kx, ky, qx, qy)`` on the product of disks.

    ``(kx, ky)`` is the receive wavenumber, ``(qx, qy)`` the source one.
    """

    medium: MediumParams
    gain: float

    def _base(self, kx, ky, qx, qy):
        raise NotImplementedError

    def amplitude(self, kx, ky, qx, qy):
        return (self.gain * self._base(kx, ky, qx, qy))[()]

    def on_grids(self, grid_r: DiskGrid, grid_s: DiskGrid) -> np.ndarray:
        parts = self.separable_parts(grid_r, grid_s)
        if parts is not None:
            return np.outer(parts[0], parts[1])
        return self.amplitude(grid_r.kx[:, None], grid_r.ky[:, None],
                              grid_s.kx[None, :], grid_s.ky[None, :])

    def separable_parts(self, grid_r: DiskGrid, grid_s: DiskGrid):
        """``(a_r, a_s)`` with ``A = outer(a_r, a_s)`` on the grids, or ``None``."""
        return None

    def scaled(self, c: float) -> "SpectralFactor":
        if c < 0:
            raise DomainError("scale must be non-negative")
        return replace(self, gain=self.gain * c)


@dataclass(frozen=True)
class Separable(SpectralFactor):
    """Product of a receive and a source angular density.

    With unit-mass densities the continuum power equals ``target_power``.
    """

    receive: AngularDistribution
    source: AngularDistribution
    medium: MediumParams
    target_power: float = 1.0
    gain: float = 1.0
    form = "separable"

    def __post_init__(self):
        if isinstance(self.receive, Discrete) or isinstance(self.source, Discrete):
            raise ConfigError("discrete distributions are synthesized as rays, not as a factor")
        if self.target_power < 0:
            raise DomainError("target power must be non-negative")

    @property
    def _scale(self):
        return self.target_power / spherical_power_constant(self.medium)

    def _base(self, kx, ky, qx, qy):
        pr = self.receive.pdf(_dirs(kx, ky, self.medium))
        ps = self.source.pdf(_dirs(qx, qy, self.medium))
        return np.sqrt(self._scale * pr * ps)

    def separable_parts(self, grid_r, grid_s):
        root = math.sqrt(self._scale) * self.gain
        return (root * np.sqrt(self.receive.pdf(grid_r.directions())),
                np.sqrt(self.source.pdf(grid_s.directions())))

    def hemisphere_masses(self, resolution=(512, 1024)):
        dirs, w = hemisphere_quadrature(resolution)
        return float(np.sum(self.receive.pdf(dirs) * w)), float(np.sum(self.source.pdf(dirs) * w))


@dataclass(frozen=True)
class IsotropicClosedForm(Separable):
    """Constant factor giving ``target_power`` in the continuum."""

    receive: AngularDistribution = field(default_factory=Isotropic)
    source: AngularDistribution = field(default_factory=Isotropic)
    medium: MediumParams = field(default_factory=MediumParams)
    form = "isotropic"

    def __post_init__(self):
        if self.receive != Isotropic() or self.source != Isotropic():
            raise ConfigError("the isotropic closed form uses hemisphere-normalized isotropic densities")

    @property
    def squared(self) -> float:
        """``A^2 = 16 pi^2 P / (kappa^4 eta^2)``."""
        m = self.medium
        return 16.0 * math.pi**2 * self.target_power / (m.kappa**4 * m.eta**2) * self.gain**2


def isotropic_factor(medium: MediumParams, target_power: float = 1.0) -> IsotropicClosedForm:
    return IsotropicClosedForm(medium=medium, target_power=target_power)


@dataclass(frozen=True, eq=False)
class Coupled(SpectralFactor):
    """Dense amplitude table on a (receive grid x source grid) product."""

    values: np.ndarray
    grid_r: DiskGrid
    grid_s: DiskGrid
    gain: float = 1.0
    form = "coupled"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size > MAX_COUPLED_ENTRIES:
            raise ResourceLimitError(f"coupled factor with {v.size} entries exceeds 2^28")
        if v.shape != (self.grid_r.size, self.grid_s.size):
            raise ConfigError(f"values shape {v.shape} does not match grids "
                              f"({self.grid_r.size}, {self.grid_s.size})")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("coupled factor values must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def medium(self):
        return self.grid_r.medium

    @staticmethod
    def _lookup(grid, x, y):
        tree = cKDTree(np.stack([grid.kx, grid.ky], axis=-1))
        pts = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
        dist, idx = tree.query(pts)
        if np.any(dist > 1e-9 * grid.medium.kappa):
            raise DomainError("coupled factor evaluated away from its grid nodes")
        return idx

    def _base(self, kx, ky, qx, qy):
        i = self._lookup(self.grid_r, kx, ky)
        j = self._lookup(self.grid_s, qx, qy)
        return self.values[i, j]

    def on_grids(self, grid_r, grid_s):
        if grid_r is self.grid_r and grid_s is self.grid_s:
            return self.gain * self.values
        return super().on_grids(grid_r, grid_s)


@dataclass(frozen=True, eq=False)
class FunctionFactor(SpectralFactor):
    """Factor given by a vectorized callable ``f(kx, ky, qx, qy)``."""

    func: Callable
    medium: MediumParams
    gain: float = 1.0
    form = "function"

    def _base(self, kx, ky, qx, qy):
        _dirs(kx, ky, self.medium)
        _dirs(qx, qy, self.medium)
        out = np.asarray(self.func(kx, ky, qx, qy), dtype=float)
        if np.any(out < 0):
            raise DomainError("spectral factor must be non-negative")
        return np.broadcast_to(out, np.broadcast(kx, ky, qx, qy).shape)


@dataclass(frozen=True, eq=False)
class Psd4Grid:
    values: np.ndarray
    medium: MediumParams
    provenance: str = ""


def psd4(factor: SpectralFactor, kx, ky, qx, qy):
    """4D power spectral density at receive ``(kx, ky)`` and source ``(qx, qy)``."""
    m = factor.medium
    gr = np.sqrt(m.kappa**2 - np.asarray(kx, float) ** 2 - np.asarray(ky, float) ** 2)
    gs = np.sqrt(m.kappa**2 - np.asarray(qx, float) ** 2 - np.asarray(qy, float) ** 2)
    A = factor.amplitude(kx, ky, qx, qy)
    return ((0.5 * m.kappa * m.eta) ** 2 * A**2 / (gr * gs))[()]


def psd4_grid(factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid) -> Psd4Grid:
    m = factor.medium
    A = factor.on_grids(grid_r, grid_s)
    S = (0.5 * m.kappa * m.eta) ** 2 * A**2 / np.outer(grid_r.gamma, grid_s.gamma)
    return Psd4Grid(S, m, provenance=getattr(factor, "form", type(factor).__name__))


def average_power(factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid) -> float:
    """Disk quadrature of the PSD divided by ``(2 pi)^4``."""
    m = factor.medium
    ur = grid_r.weights / grid_r.gamma
    us = grid_s.weights / grid_s.gamma
    pref = (0.5 * m.kappa * m.eta) ** 2 / (2.0 * math.pi) ** 4
    parts = factor.separable_parts(grid_r, grid_s)
    if parts is not None:
        return pref * float(np.sum(parts[0] ** 2 * ur)) * float(np.sum(parts[1] ** 2 * us))
    A = factor.on_grids(grid_r, grid_s)
    return pref * float(ur @ (A**2) @ us)


def average_power_spherical(factor: SpectralFactor, resolution=(512, 1024)) -> float:
    """Power of a separable factor from two hemisphere quadratures."""
    if not isinstance(factor, Separable):
        raise ConfigError("spherical power path needs a separable factor")
    mr, ms = factor.hemisphere_masses(resolution)
    return factor.target_power * factor.gain**2 * mr * ms


def normalize_factor(factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid,
                     target: float = 1.0) -> SpectralFactor:
    """Rescale ``factor`` so its quadrature power on the grids equals ``target``."""
    p = average_power(factor, grid_r, grid_s)
    if not p > 0:
        raise DomainError("cannot normalize a factor with zero power")
    return factor.scaled(math.sqrt(target / p))


def mercer_power_bound(factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid) -> float:
    """``(kappa^2 eta A_sup / 8)^2`` with ``A_sup`` the maximum over the grids."""
    m = factor.medium
    a_sup = float(np.max(factor.on_grids(grid_r, grid_s)))
    return (m.kappa**2 * m.eta * a_sup / 8.0) ** 2


def factor_from_6d(A6: Callable, medium: MediumParams) -> FunctionFactor:
    """4D factor from a factor on the pair of hemispheres.

    ``A6(k, q)`` takes wave vectors of shape ``(..., 3)`` lying on the
    hemispheres of radius kappa; the result is ``A6 / (2 pi kappa eta)`` with
    the longitudinal components set to ``gamma``.
    """
    scale = 1.0 / (2.0 * math.pi * medium.kappa * medium.eta)

    def f(kx, ky, qx, qy):
        k = _dirs(kx, ky, medium) * medium.kappa
        q = _dirs(qx, qy, medium) * medium.kappa
        return scale * np.asarray(A6(k, q), dtype=float)

    return FunctionFactor(f, medium)


def discrete_factor_from_rays(rays) -> Discrete:
    """Discrete angular distribution from ``(source_dir, receive_dir, gain)`` triples."""
    rays = list(rays)
    if not rays:
        raise DomainError("at least one ray is required")
    pairs = np.array([[np.asarray(r, float), np.asarray(s, float)] for s, r, _ in rays])
    gains = np.array([g for _, _, g in rays], dtype=float)
    return Discrete(pairs, gains)
