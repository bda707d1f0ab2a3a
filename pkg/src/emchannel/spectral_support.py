"""Spectral supports, bandwidth and degrees of freedom, and disk quadrature.

Polar disk grids are uniform in ``gamma`` rather than in the radius. With
``r = sqrt(kappa^2 - t^2)`` the area element becomes ``r dr dphi = t dt dphi``
and ``dA / gamma = dt dphi``, so the rim singularity of ``1/gamma`` disappears
and nodes cluster toward the rim. The same grid is an equal-area grid in
``cos(theta)`` on the hemisphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DomainError
from .geometry import MediumParams, spherical_to_cosine

DEFAULT_RIM_CUT = 1e-6  # in units of kappa
DEFAULT_REGION_RASTER = (1024, 2048)


@dataclass(frozen=True, eq=False)
class DiskGrid:
    """Quadrature nodes over the disk of propagating wavenumbers."""

    medium: MediumParams
    mode: str
    resolution: tuple
    rim_cut: float
    kx: np.ndarray = field(repr=False)
    ky: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("kx", "ky", "weights"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.kx.shape == self.ky.shape == self.weights.shape and self.kx.ndim == 1):
            raise ConfigError("node arrays must be 1D with equal length")
        if self.kx.size == 0:
            raise ConfigError("grid has no nodes")
        if np.any(self.weights <= 0):
            raise ConfigError("quadrature weights must be positive")
        limit = (self.medium.kappa - self.rim_cut) ** 2
        if np.any(self.kx**2 + self.ky**2 > limit * (1 + 1e-12)):
            raise ConfigError("grid nodes outside the retained disk")

    @property
    def size(self) -> int:
        return self.kx.size

    @property
    def gamma(self) -> np.ndarray:
        return np.sqrt(self.medium.kappa**2 - self.kx**2 - self.ky**2)

    def directions(self) -> np.ndarray:
        """Unit propagation directions ``(kx, ky, gamma) / kappa``."""
        return np.stack([self.kx, self.ky, self.gamma], axis=-1) / self.medium.kappa

    def negation_permutation(self, tol: float = 1e-9):
        """Index map ``m -> n`` with ``k_n = -k_m``, or ``None`` if not closed."""
        pts = np.stack([self.kx, self.ky], axis=-1)
        dist, idx = cKDTree(pts).query(-pts)
        if np.any(dist > tol * self.medium.kappa):
            return None
        if np.any(self.weights[idx] != self.weights):
            return None
        return idx

    def is_negation_closed(self) -> bool:
        return self.negation_permutation() is not None

    def descriptor(self) -> dict:
        return {
            "mode": self.mode,
            "resolution": list(self.resolution),
            "rim_cut": self.rim_cut,
            "n_nodes": int(self.size),
            "kappa": self.medium.kappa,
        }

    def to_json(self) -> dict:
        d = self.descriptor()
        d.update(
            wavelength=self.medium.wavelength,
            eta=self.medium.eta,
            nodes=np.stack([self.kx, self.ky, self.weights], axis=-1).tolist(),
        )
        return d

    @classmethod
    def from_json(cls, data: dict) -> "DiskGrid":
        nodes = np.asarray(data["nodes"], dtype=float)
        medium = MediumParams(wavelength=data["wavelength"], eta=data.get("eta", 1.0))
        return cls(medium, data["mode"], tuple(data["resolution"]), data["rim_cut"],
                   nodes[:, 0], nodes[:, 1], nodes[:, 2])

    @classmethod
    def from_nodes(cls, medium, kx, ky, weights, rim_cut=None, mode="explicit"):
        if rim_cut is None:
            rim_cut = DEFAULT_RIM_CUT * medium.kappa
        kx = np.asarray(kx, dtype=float)
        return cls(medium, mode, (kx.size,), rim_cut, kx, np.asarray(ky, dtype=float),
                   np.asarray(weights, dtype=float))


def _check_rim_cut(medium, rim_cut):
    if rim_cut is None:
        rim_cut = DEFAULT_RIM_CUT * medium.kappa
    if not (0 < rim_cut < medium.kappa / 10):
        raise ConfigError(f"rim_cut must lie in (0, kappa/10), got {rim_cut}")
    return float(rim_cut)


def build_disk_grid(medium: MediumParams, mode: str = "polar", resolution=(64, 64),
                    rim_cut: float | None = None) -> DiskGrid:
    """Build a quadrature grid over the retained disk ``|k| <= kappa - rim_cut``.

    Parameters
    ----------
    medium : MediumParams
    mode : {"polar", "cartesian"}
        ``polar``: midpoint rule uniform in ``gamma`` times a uniform azimuth
        grid; weights ``gamma * dgamma * dphi``. ``cartesian``: lattice
        symmetric about the origin, clipped to the disk.
    resolution : (int, int)
        ``(n_radial, n_angular)`` or ``(n_x, n_y)``; each at least 4.
    rim_cut : float, optional
        Radial distance kept clear of the rim, in rad/m. Defaults to
        ``1e-6 * kappa``.
    """
    try:
        n1, n2 = (int(v) for v in resolution)
    except (TypeError, ValueError):
        raise ConfigError(f"resolution must be a pair of integers, got {resolution!r}")
    if n1 < 4 or n2 < 4:
        raise ConfigError(f"resolution must be >= 4 per axis, got {resolution!r}")
    rim_cut = _check_rim_cut(medium, rim_cut)
    kappa = medium.kappa
    r_max = kappa - rim_cut
    if mode == "polar":
        g_min = math.sqrt(kappa**2 - r_max**2)
        dt = (kappa - g_min) / n1
        t = g_min + (np.arange(n1) + 0.5) * dt
        r = np.sqrt(kappa**2 - t**2)
        dphi = 2.0 * math.pi / n2
        half = n2 // 2
        phi = (np.arange(half if n2 % 2 == 0 else n2) + 0.5) * dphi
        c, s = np.cos(phi), np.sin(phi)
        if n2 % 2 == 0:
            # second half is the exact negation of the first, so the grid is
            # closed under k -> -k bit for bit
            c = np.concatenate([c, -c])
            s = np.concatenate([s, -s])
        kx = np.outer(r, c).ravel()
        ky = np.outer(r, s).ravel()
        w = np.repeat(t * dt * dphi, c.size)
    elif mode == "cartesian":
        hx = 2.0 * kappa / n1
        hy = 2.0 * kappa / n2
        ix = np.arange(n1) - (n1 - 1) / 2.0
        iy = np.arange(n2) - (n2 - 1) / 2.0
        X, Y = np.meshgrid(ix * hx, iy * hy, indexing="ij")
        keep = X**2 + Y**2 <= r_max**2
        kx, ky = X[keep], Y[keep]
        w = np.full(kx.size, hx * hy)
    else:
        raise ConfigError(f"unknown grid mode {mode!r}")
    return DiskGrid(medium, mode, (n1, n2), rim_cut, kx, ky, w)


def disk_inverse_gamma_integral(grid: DiskGrid) -> float:
    """Quadrature of ``1/gamma`` over the grid; tends to ``2 pi kappa``."""
    return float(np.sum(grid.weights / grid.gamma))


@dataclass(frozen=True, eq=False)
class LineGrid:
    """Quadrature nodes over the segment ``|kx| <= kappa`` (2D model)."""

    medium: MediumParams
    mode: str
    n: int
    rim_cut: float
    kx: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.kx.size

    @property
    def gamma(self) -> np.ndarray:
        return np.sqrt(self.medium.kappa**2 - self.kx**2)

    @property
    def theta(self) -> np.ndarray:
        """Polar angle in ``(0, pi)`` with ``kx = kappa cos(theta)``."""
        return np.arccos(np.clip(self.kx / self.medium.kappa, -1.0, 1.0))

    def descriptor(self) -> dict:
        return {"mode": self.mode, "resolution": [self.n], "rim_cut": self.rim_cut,
                "n_nodes": int(self.size), "kappa": self.medium.kappa}


def build_line_grid(medium: MediumParams, mode: str = "polar", n: int = 256,
                    rim_cut: float | None = None) -> LineGrid:
    """Grid over ``|kx| <= kappa - rim_cut``.

    ``polar`` is uniform in the angle ``theta`` (``kx = kappa cos theta``) with
    weights ``gamma * dtheta``; ``cosine`` is uniform in ``kx``.
    """
    n = int(n)
    if n < 4:
        raise ConfigError("line grid needs at least 4 nodes")
    rim_cut = _check_rim_cut(medium, rim_cut)
    kappa = medium.kappa
    x_max = kappa - rim_cut
    if mode == "polar":
        th0 = math.acos(x_max / kappa)
        dth = (math.pi - 2 * th0) / n
        th = th0 + (np.arange(n) + 0.5) * dth
        kx = kappa * np.cos(th)
        w = kappa * np.sin(th) * dth
    elif mode == "cosine":
        h = 2 * x_max / n
        kx = (np.arange(n) - (n - 1) / 2.0) * h
        w = np.full(n, h)
    else:
        raise ConfigError(f"unknown line grid mode {mode!r}")
    return LineGrid(medium, mode, n, rim_cut, kx, w)


# --- bandwidth and degrees of freedom -------------------------------------


def bandwidth_isotropic(medium: MediumParams) -> float:
    """Area of the disk of propagating wavenumbers, ``pi kappa^2``."""
    return math.pi * medium.kappa**2


@dataclass(frozen=True)
class Rect:
    """Angular rectangle in radians; azimuth interval may wrap past 2*pi."""

    theta_min: float
    theta_max: float
    phi_min: float
    phi_max: float

    def __post_init__(self):
        if not (0 <= self.theta_min < self.theta_max <= math.pi / 2 + 1e-12):
            raise DomainError("rectangle elevation must satisfy 0 <= min < max <= pi/2")
        if not self.phi_max > self.phi_min:
            raise DomainError("rectangle azimuth interval must be non-empty")

    def contains(self, theta, phi):
        span = self.phi_max - self.phi_min
        in_phi = np.ones(np.shape(phi), bool) if span >= 2 * math.pi else (
            np.mod(phi - self.phi_min, 2 * math.pi) <= span)
        return (theta >= self.theta_min) & (theta <= self.theta_max) & in_phi


@dataclass(frozen=True)
class Cap:
    """Spherical cap around ``(theta, phi)`` with the given half-angle (radians)."""

    theta: float
    phi: float
    half_angle: float

    def __post_init__(self):
        if not (0 <= self.theta <= math.pi / 2 + 1e-12):
            raise DomainError("cap centre must lie on the upper hemisphere")
        if not (0 < self.half_angle <= math.pi):
            raise DomainError("cap half-angle must lie in (0, pi]")

    def contains(self, theta, phi):
        c = spherical_to_cosine(self.theta, self.phi)
        d = spherical_to_cosine(theta, phi)
        return d @ c >= math.cos(self.half_angle) - 1e-15


Region = Union[Rect, Cap]


@dataclass(frozen=True)
class AngularRegionSet:
    """Union of rectangles and caps on the upper hemisphere."""

    regions: tuple

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            raise DomainError("empty region set")

    def contains(self, theta, phi):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        out = np.zeros(np.broadcast(theta, phi).shape, dtype=bool)
        for reg in self.regions:
            out |= reg.contains(theta, phi)
        return out

    def _raster(self, resolution):
        nt, nphi = resolution
        dth = (math.pi / 2) / nt
        dph = 2 * math.pi / nphi
        th = (np.arange(nt) + 0.5) * dth
        ph = (np.arange(nphi) + 0.5) * dph
        T, P = np.meshgrid(th, ph, indexing="ij")
        return T, P, dth * dph, self.contains(T, P)

    def solid_angle(self, resolution=DEFAULT_REGION_RASTER) -> float:
        """Solid angle of the union, by rasterization."""
        T, _, dA, mask = self._raster(resolution)
        return float(np.sum(np.sin(T) * mask) * dA)

    def disk_measure(self, resolution=DEFAULT_REGION_RASTER) -> float:
        """Area of the union's image on the unit disk (``cos * sin`` Jacobian)."""
        T, _, dA, mask = self._raster(resolution)
        return float(np.sum(np.cos(T) * np.sin(T) * mask) * dA)


def bandwidth_regions(regions: AngularRegionSet | Sequence[Region], medium: MediumParams,
                      resolution=DEFAULT_REGION_RASTER) -> float:
    """Spatial-frequency bandwidth of a union of angular regions (rad^2/m^2)."""
    if not isinstance(regions, AngularRegionSet):
        regions = AngularRegionSet(tuple(regions))
    return medium.kappa**2 * regions.disk_measure(resolution)


def dof_segment(omega: float, L: float) -> float:
    """Degrees of freedom of a segment of length ``L`` with 1D bandwidth ``omega``."""
    if omega <= 0 or L <= 0:
        raise DomainError("omega and L must be positive")
    return omega * L / math.pi


def dof_planar_loss_ratio(medium: MediumParams | None = None) -> float:
    """Ratio of the disk bandwidth to that of its bounding square (pi/4)."""
    medium = medium or MediumParams()
    return bandwidth_isotropic(medium) / (2.0 * medium.kappa) ** 2


def evanescent_power_loss(d0, medium: MediumParams):
    """Power loss ``exp(-2 kappa d0)`` of the broadside evanescent wave."""
    d0 = np.asarray(d0, dtype=float)
    if np.any(d0 < 0):
        raise DomainError("distance must be non-negative")
    return np.exp(-2.0 * medium.kappa * d0)[()]


def evanescent_power_loss_db(d0, medium: MediumParams):
    """Same loss in dB, evaluated in closed form so it never underflows."""
    d0 = np.asarray(d0, dtype=float)
    if np.any(d0 < 0):
        raise DomainError("distance must be non-negative")
    return (-20.0 * math.log10(math.e) * medium.kappa * d0)[()]
