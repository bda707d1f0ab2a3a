"""Directional statistics on the upper hemisphere.

Densities are per steradian. By default every distribution is normalized on
the upper hemisphere: the isotropic density is ``1/(2 pi)`` and each vMF
component is divided by its exact hemisphere mass. ``full_sphere=True``
switches to the full-sphere constants (``1/(4 pi)`` and ``c(alpha)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .geometry import cosine_to_spherical, spherical_to_cosine
from .spectral_support import AngularRegionSet

SMALL_ALPHA = 1e-6


def _as_direction(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float).reshape(3)
    n = np.linalg.norm(mu)
    if not np.isfinite(n) or n == 0:
        raise DomainError("direction must be a finite non-zero vector")
    mu = mu / n
    if mu[2] < -1e-12:
        raise DomainError("direction must lie on the upper hemisphere")
    return mu


def vmf_norm_const(alpha: float) -> float:
    """Full-sphere vMF constant ``alpha / (4 pi sinh alpha)``."""
    if alpha < 0:
        raise DomainError("alpha must be non-negative")
    if alpha < SMALL_ALPHA:
        return 1.0 / (4.0 * math.pi)
    if alpha > 700:
        return 0.0
    return alpha / (4.0 * math.pi * math.sinh(alpha))


def _log_sphere_scale(alpha):
    # log of c(alpha) * e^alpha, finite for any alpha
    if alpha < SMALL_ALPHA:
        return math.log(1.0 / (4.0 * math.pi))
    return math.log(alpha / (2.0 * math.pi)) - math.log(-math.expm1(-2.0 * alpha))


@dataclass(frozen=True)
class VmfComponent:
    mu: np.ndarray
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _as_direction(self.mu))
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be finite and >= 0, got {self.alpha}")

    @classmethod
    def from_angles(cls, theta: float, phi: float, alpha: float | None = None,
                    circular_variance: float | None = None) -> "VmfComponent":
        """Build from a modal direction in radians and either alpha or nu^2."""
        if (alpha is None) == (circular_variance is None):
            raise DomainError("give exactly one of alpha and circular_variance")
        if alpha is None:
            alpha = alpha_from_variance(circular_variance)
        return cls(spherical_to_cosine(theta, phi), float(alpha))

    def __hash__(self):
        return hash((tuple(self.mu.tolist()), self.alpha))

    def __eq__(self, other):
        return (isinstance(other, VmfComponent) and self.alpha == other.alpha
                and np.array_equal(self.mu, other.mu))


def vmf_pdf(direction, comp: VmfComponent):
    """Full-sphere vMF density ``c(alpha) exp(alpha <mu, x>)``."""
    t = np.asarray(direction, dtype=float) @ comp.mu
    a = comp.alpha if comp.alpha >= SMALL_ALPHA else 0.0
    return np.exp(_log_sphere_scale(a) + a * (t - 1.0))[()]


@lru_cache(maxsize=256)
def _log_hemisphere_mass(alpha: float, mu_z: float) -> float:
    """log of e^{-alpha} * integral over the upper hemisphere of e^{alpha <mu,x>}."""
    if alpha < SMALL_ALPHA:
        return math.log(2.0 * math.pi)
    mu_z = min(max(mu_z, 0.0), 1.0)
    th_mu = math.acos(mu_z)
    s_mu = math.sin(th_mu)

    # e^{a cos th cos th_mu} I0(a sin th sin th_mu) = e^{a(... + sin th sin th_mu)} i0e(...)
    def g(th):
        b = alpha * math.sin(th) * s_mu
        return math.sin(th) * math.exp(alpha * (math.cos(th) * mu_z - 1.0) + b) * special.i0e(b)

    width = min(1.0, 4.0 / math.sqrt(alpha))
    pts = sorted({min(max(th_mu + d, 0.0), math.pi / 2) for d in (-width, 0.0, width)})
    edges = [0.0] + [p for p in pts if 0.0 < p < math.pi / 2] + [math.pi / 2]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
    return math.log(2.0 * math.pi * total)


def hemisphere_log_normalizer(comp: VmfComponent) -> float:
    """``log`` of the hemisphere mass of ``exp(alpha (<mu,x> - 1))``."""
    return _log_hemisphere_mass(float(comp.alpha), float(comp.mu[2]))


def vmf_pdf_hemisphere(direction, comp: VmfComponent):
    """vMF density renormalized to integrate to one over the upper hemisphere."""
    t = np.asarray(direction, dtype=float) @ comp.mu
    a = comp.alpha if comp.alpha >= SMALL_ALPHA else 0.0
    return np.exp(a * (t - 1.0) - hemisphere_log_normalizer(comp))[()]


def lower_hemisphere_mass(comp: VmfComponent) -> float:
    """Mass of the full-sphere vMF below the horizon.

    This is the error made by using the full-sphere constant on the upper
    hemisphere only.
    """
    upper = math.exp(_log_sphere_scale(comp.alpha) + hemisphere_log_normalizer(comp))
    return 1.0 - upper


@dataclass(frozen=True)
class VmfMixture:
    components: tuple
    weights: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        w = tuple(float(v) for v in self.weights)
        if not comps or len(comps) != len(w):
            raise DomainError("mixture needs matching, non-empty component and weight lists")
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-12:
            raise DomainError("mixture weights must be non-negative and sum to 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @classmethod
    def equal(cls, components: Sequence[VmfComponent]) -> "VmfMixture":
        n = len(components)
        w = [1.0 / n] * n
        w[-1] = 1.0 - sum(w[:-1])
        return cls(tuple(components), tuple(w))


def mixture_pdf(direction, mix: VmfMixture, hemisphere: bool = False):
    """Weighted sum of component densities (full-sphere constants by default)."""
    pdf = vmf_pdf_hemisphere if hemisphere else vmf_pdf
    return sum(w * pdf(direction, c) for c, w in zip(mix.components, mix.weights))


# --- concentration and moments ---------------------------------------------


def mean_resultant(alpha):
    """``E{t} = coth(alpha) - 1/alpha`` with a series near zero."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0):
        raise DomainError("alpha must be non-negative")
    small = a < 1e-3
    safe = np.where(small, 1.0, a)
    out = np.where(small, a / 3.0 - a**3 / 45.0, 1.0 / np.tanh(safe) - 1.0 / safe)
    return out[()]


def circular_variance(alpha):
    """``1 - E{t}^2``."""
    return (1.0 - np.asarray(mean_resultant(alpha)) ** 2)[()]


def alpha_from_variance(nu2: float) -> float:
    """Invert :func:`circular_variance` by bracketing and bisection."""
    nu2 = float(nu2)
    if not (0.0 < nu2 <= 1.0):
        raise DomainError(f"circular variance must lie in (0, 1], got {nu2}")
    if nu2 == 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while circular_variance(hi) > nu2:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise DomainError("circular variance too small to invert")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if circular_variance(mid) > nu2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _second_moment_t(alpha):
    if alpha < SMALL_ALPHA:
        return 1.0 / 3.0
    # substitute s = alpha (1 - t) so the peak at t = 1 keeps unit width
    f = lambda s: (1.0 - s / alpha) ** 2 * math.exp(-s)
    upper = 2.0 * alpha
    pts = [p for p in (1.0, 10.0, 40.0) if p < upper]
    num, _ = integrate.quad(f, 0.0, upper, points=pts or None, epsabs=0.0, epsrel=1e-13, limit=200)
    return num / -math.expm1(-upper)


def vmf_moments(comp: VmfComponent, support: str = "sphere", resolution=(512, 1024)):
    """Mean vector and covariance matrix of a vMF component.

    ``support="sphere"`` uses the closed-form structure about ``mu`` with
    ``E{t^2}`` from 1D quadrature. ``support="hemisphere"`` integrates the
    hemisphere-truncated density directly, which breaks the rotational
    symmetry when ``mu`` is tilted.
    """
    mu = comp.mu
    if support == "sphere":
        et = float(mean_resultant(comp.alpha))
        et2 = _second_moment_t(comp.alpha)
        P = np.outer(mu, mu)
        cov = (et2 - et**2) * P + 0.5 * (1.0 - et2) * (np.eye(3) - P)
        return et * mu, cov
    if support == "hemisphere":
        dirs, w = hemisphere_quadrature(resolution)
        p = vmf_pdf_hemisphere(dirs, comp) * w
        mass = p.sum()
        mean = (p[:, None] * dirs).sum(0) / mass
        d = dirs - mean
        cov = (p[:, None, None] * d[:, :, None] * d[:, None, :]).sum(0) / mass
        return mean, cov
    raise DomainError(f"unknown support {support!r}")


@lru_cache(maxsize=8)
def _hemisphere_rule(nt, nphi):
    x, wx = np.polynomial.legendre.leggauss(nt)
    th = 0.25 * math.pi * (x + 1.0)
    wt = 0.25 * math.pi * wx
    dph = 2 * math.pi / nphi
    ph = (np.arange(nphi) + 0.5) * dph
    T, P = np.meshgrid(th, ph, indexing="ij")
    dirs = spherical_to_cosine(T, P).reshape(-1, 3)
    w = (np.sin(T) * wt[:, None] * dph).ravel()
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


def hemisphere_quadrature(resolution=(512, 1024)):
    """Gauss-Legendre in elevation times midpoint in azimuth.

    Returns ``(directions, weights)``; the weights include ``sin(theta)``.
    """
    nt, nphi = (int(v) for v in resolution)
    return _hemisphere_rule(nt, nphi)


# --- distributions ------------------------------------------------------------


class AngularDistribution:
    """Base class; subclasses provide ``pdf`` and ``sample``."""

    kind = "abstract"
    smooth = True

    def pdf(self, directions):
        raise NotImplementedError

    def pdf_angles(self, theta, phi):
        return self.pdf(spherical_to_cosine(theta, phi))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Isotropic(AngularDistribution):
    full_sphere: bool = False
    kind = "isotropic"

    @property
    def value(self) -> float:
        return 1.0 / (4 * math.pi) if self.full_sphere else 1.0 / (2 * math.pi)

    def pdf(self, directions):
        d = np.asarray(directions, dtype=float)
        return np.full(d.shape[:-1], self.value)[()]

    def sample(self, n, rng):
        z = 1.0 - rng.random(n)  # (0, 1]
        ph = 2 * math.pi * rng.random(n)
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([s * np.cos(ph), s * np.sin(ph), z], axis=-1)


@dataclass(frozen=True)
class Mixture(AngularDistribution):
    mixture: VmfMixture
    full_sphere: bool = False
    kind = "vmf_mixture"

    def pdf(self, directions):
        return mixture_pdf(directions, self.mixture, hemisphere=not self.full_sphere)

    def sample(self, n, rng):
        w = np.asarray(self.mixture.weights)
        which = rng.choice(len(w), size=n, p=w / w.sum())
        out = np.empty((n, 3))
        for i, comp in enumerate(self.mixture.components):
            sel = np.flatnonzero(which == i)
            if sel.size:
                out[sel] = sample_vmf(comp, sel.size, rng)
        return out


@dataclass(frozen=True)
class Piecewise(AngularDistribution):
    regions: AngularRegionSet
    resolution: tuple = (1024, 2048)
    kind = "piecewise"
    smooth = False

    @property
    def value(self) -> float:
        return 1.0 / self.regions.solid_angle(self.resolution)

    def pdf(self, directions):
        d = np.asarray(directions, dtype=float)
        th, ph = cosine_to_spherical(d[..., 0], d[..., 1])
        return np.where(self.regions.contains(th, ph), self.value, 0.0)[()]

    def sample(self, n, rng):
        out = np.empty((0, 3))
        iso = Isotropic()
        while out.shape[0] < n:
            cand = iso.sample(max(4 * (n - out.shape[0]), 64), rng)
            th, ph = cosine_to_spherical(cand[:, 0], cand[:, 1])
            out = np.concatenate([out, cand[self.regions.contains(th, ph)]])
        return out[:n]


@dataclass(frozen=True)
class Discrete(AngularDistribution):
    """Finite set of directions (or receive/source direction pairs) with gains.

    ``directions`` has shape ``(N, 3)`` for one-sided sets or ``(N, 2, 3)``
    for pairs ordered ``(receive, source)``. Gains are power weights and are
    normalized to sum to one.
    """

    directions: np.ndarray
    gains: np.ndarray
    kind = "discrete"
    smooth = False

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        g = np.asarray(self.gains, dtype=float).ravel()
        if d.ndim == 1:
            d = d[None, :]
        if g.size == 0 or d.shape[0] != g.size or d.shape[-1] != 3 or d.ndim not in (2, 3):
            raise DomainError("discrete distribution needs N directions and N gains")
        if np.any(g < 0) or g.sum() <= 0:
            raise DomainError("gains must be non-negative with positive sum")
        d = d / np.linalg.norm(d, axis=-1, keepdims=True)
        if np.any(d[..., 2] < -1e-12):
            raise DomainError("ray directions must lie on the upper hemisphere")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "gains", g / g.sum())

    @property
    def paired(self) -> bool:
        return self.directions.ndim == 3

    def pdf(self, directions):
        raise DomainError("a discrete distribution has no density")

    def sample(self, n, rng):
        idx = rng.choice(self.gains.size, size=n, p=self.gains)
        d = self.directions[idx]
        return d[:, 0] if self.paired else d


def sample_vmf(comp: VmfComponent, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw from the vMF restricted to the upper hemisphere.

    Inverse CDF on ``t = <mu, x>`` plus a uniform tangent angle; draws below
    the horizon are rejected and redrawn.
    """
    mu = comp.mu
    a = comp.alpha
    helper = np.array([1.0, 0.0, 0.0]) if abs(mu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(mu, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(mu, e1)
    chunks, have = [], 0
    while have < n:
        m = max(2 * (n - have), 64)
        u = rng.random(m)
        if a < SMALL_ALPHA:
            t = 2.0 * u - 1.0
        else:
            t = 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * a)) / a
        t = np.clip(t, -1.0, 1.0)
        psi = 2 * math.pi * rng.random(m)
        s = np.sqrt(1.0 - t * t)
        x = t[:, None] * mu + s[:, None] * (np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2)
        x = x[x[:, 2] >= 0.0]
        chunks.append(x)
        have += x.shape[0]
    return np.concatenate(chunks)[:n]


def sample_directions(dist: AngularDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` directions drawn from ``dist`` as an ``(n, 3)`` array."""
    return dist.sample(int(n), rng)


def sample_direction(dist: AngularDistribution, rng: np.random.Generator) -> np.ndarray:
    return sample_directions(dist, 1, rng)[0]


def check_normalization(dist: AngularDistribution, resolution=(512, 1024)) -> float:
    """Absolute deviation of the hemisphere integral of ``dist`` from one."""
    if isinstance(dist, Discrete):
        return abs(float(dist.gains.sum()) - 1.0)
    if isinstance(dist, Piecewise):
        # the density is 1/measure on the set, so the check is the cancellation
        return abs(dist.value * dist.regions.solid_angle(dist.resolution) - 1.0)
    dirs, w = hemisphere_quadrature(resolution)
    return abs(float(np.sum(dist.pdf(dirs) * w)) - 1.0)


# --- presets --------------------------------------------------------------


def fig8b_preset() -> Mixture:
    """Single cluster at (45 deg, 0 deg) with circular variance 0.01."""
    comp = VmfComponent.from_angles(math.radians(45), 0.0, circular_variance=0.01)
    return Mixture(VmfMixture((comp,), (1.0,)))


def fig8c_preset() -> Mixture:
    """Three equally weighted clusters."""
    spec = [(45, 0, 0.01), (50, 90, 0.02), (20, 130, 0.004)]
    comps = [VmfComponent.from_angles(math.radians(t), math.radians(p), circular_variance=v)
             for t, p, v in spec]
    return Mixture(VmfMixture.equal(comps))
