"""Wavenumber-domain geometry.

Coordinate maps between the upper hemisphere and the disk of propagating
transverse wavenumbers, the longitudinal branch rule, plane-wave evaluators
and free-space Green's functions.

Array conventions: wave vectors and points are arrays whose last axis has
length 3 (``(..., 3)``); 2D points use a last axis of length 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._bessel import hankel1_0
from .errors import DomainError, SingularityError


@dataclass(frozen=True)
class MediumParams:
    """Homogeneous medium at a single frequency.

    Parameters
    ----------
    wavelength : float
        Wavelength in metres.
    eta : float
        Intrinsic impedance, used as a dimensionless scale (default 1).
    """

    wavelength: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.wavelength) and self.wavelength > 0):
            raise DomainError(f"wavelength must be positive, got {self.wavelength}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise DomainError(f"eta must be positive, got {self.eta}")

    @property
    def kappa(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @classmethod
    def from_kappa(cls, kappa: float, eta: float = 1.0) -> "MediumParams":
        return cls(wavelength=2.0 * math.pi / kappa, eta=eta)

    def to_dict(self) -> dict:
        return {"wavelength": self.wavelength, "eta": self.eta, "kappa": self.kappa}


class SphericalAngles(NamedTuple):
    theta: np.ndarray
    phi: np.ndarray


def gamma(kx, ky, medium: MediumParams):
    """Real longitudinal wavenumber on the disk, ``nan`` where evanescent."""
    q = medium.kappa**2 - np.asarray(kx, dtype=float) ** 2 - np.asarray(ky, dtype=float) ** 2
    with np.errstate(invalid="ignore"):
        return np.where(q >= 0, np.sqrt(np.abs(q)), np.nan)[()]


def kappa_z(kx, ky, medium: MediumParams):
    """Longitudinal wavenumber with the radiating branch.

    ``gamma`` on the disk and ``i |gamma|`` outside, so that both the real and
    imaginary parts are non-negative.
    """
    q = medium.kappa**2 - np.asarray(kx, dtype=float) ** 2 - np.asarray(ky, dtype=float) ** 2
    root = np.sqrt(np.abs(q))
    return np.where(q >= 0, root + 0j, 1j * root)[()]


def kappa_z_sqrt(kx, ky, medium: MediumParams):
    """Square root of :func:`kappa_z` on the same branch."""
    q = medium.kappa**2 - np.asarray(kx, dtype=float) ** 2 - np.asarray(ky, dtype=float) ** 2
    root = np.abs(q) ** 0.25
    return np.where(q >= 0, root + 0j, (1 + 1j) / math.sqrt(2.0) * root)[()]


def wave_vector(kx, ky, medium: MediumParams):
    """Stack ``(kx, ky, kappa_z)`` into a complex ``(..., 3)`` array."""
    kx, ky = np.broadcast_arrays(np.asarray(kx, dtype=float), np.asarray(ky, dtype=float))
    return np.stack([kx + 0j, ky + 0j, np.asarray(kappa_z(kx, ky, medium))], axis=-1)


def spherical_to_cosine(theta, phi):
    """Cosine directions ``(sin t cos p, sin t sin p, cos t)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack(np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1)


def cosine_to_spherical(kx_hat, ky_hat) -> SphericalAngles:
    """Inverse of :func:`spherical_to_cosine` on the upper hemisphere.

    The azimuth is wrapped to ``[0, 2*pi)`` and set to 0 at the zenith.
    """
    kx_hat = np.asarray(kx_hat, dtype=float)
    ky_hat = np.asarray(ky_hat, dtype=float)
    rho = np.hypot(kx_hat, ky_hat)
    if np.any(rho > 1.0 + 1e-12):
        raise DomainError("cosine directions outside the unit disk")
    theta = np.arcsin(np.minimum(rho, 1.0))
    phi = np.mod(np.arctan2(ky_hat, kx_hat), 2.0 * math.pi)
    phi = np.where(rho == 0.0, 0.0, phi)
    # mod can return exactly 2*pi for tiny negative angles
    phi = np.where(phi >= 2.0 * math.pi, 0.0, phi)
    return SphericalAngles(theta[()], phi[()])


def hemisphere_jacobian(theta):
    """Jacobian ``cos(theta) sin(theta)`` of the hemisphere-to-disk map."""
    theta = np.asarray(theta, dtype=float)
    return (np.cos(theta) * np.sin(theta))[()]


def plane_wave_source(k, s):
    """Source response ``exp(-i k.s)``; ``k`` may be complex (evanescent)."""
    k = np.asarray(k, dtype=complex)
    s = np.asarray(s, dtype=float)
    return np.exp(-1j * np.sum(k * s, axis=-1))[()]


def plane_wave_receive(k, r):
    """Receive response ``exp(+i k.r)``."""
    k = np.asarray(k, dtype=complex)
    r = np.asarray(r, dtype=float)
    return np.exp(1j * np.sum(k * r, axis=-1))[()]


def plane_wave_source_checked(k, s):
    """Like :func:`plane_wave_source` but also flags exponential growth."""
    value = plane_wave_source(k, s)
    return value, bool(np.any(np.abs(value) > 1.0 + 1e-12))


def _norm(p, dim):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != dim:
        raise DomainError(f"expected {dim}D displacement(s), got shape {p.shape}")
    R = np.linalg.norm(p, axis=-1)
    if np.any(R == 0.0):
        raise SingularityError("Green's function evaluated at zero displacement")
    return R


def green3(p, medium: MediumParams):
    """Outgoing spherical wave ``exp(i kappa R) / (4 pi R)``."""
    R = _norm(p, 3)
    return (np.exp(1j * medium.kappa * R) / (4.0 * math.pi * R))[()]


def green2(p, medium: MediumParams):
    """Outgoing cylindrical wave ``(i/4) H0(kappa R)``."""
    R = _norm(p, 2)
    return (0.25j * hankel1_0(medium.kappa * R))[()]


def far_field_green(r_prime, s, medium: MediumParams):
    """Plane-wave approximation of ``green3(r_prime - s)`` for large ``|r_prime|``."""
    r_prime = np.asarray(r_prime, dtype=float)
    R = _norm(r_prime, 3)
    k = medium.kappa * r_prime / R[..., None] if np.ndim(R) else medium.kappa * r_prime / R
    return (np.exp(1j * medium.kappa * R) / (4.0 * math.pi * R) * plane_wave_source(k, s))[()]


def freespace_kernel(p, medium: MediumParams):
    """Line-of-sight channel kernel ``-i kappa eta green3(p)``."""
    return (-1j * medium.kappa * medium.eta * green3(p, medium))[()]
