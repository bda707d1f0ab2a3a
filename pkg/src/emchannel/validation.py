"""Estimators and oracles for synthesized channels.

The empirical ACF is a ratio of means. Its standard error comes from the
delta method on per-realization numerator/denominator pairs, which accounts
for the spatial averaging over all point pairs at a given displacement.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtr

from .errors import DomainError
from .geometry import MediumParams, far_field_green, green2, green3
from .psd import SpectralFactor
from .spectral_support import DiskGrid, disk_inverse_gamma_integral

KS_1PCT = 1.6276  # asymptotic Kolmogorov critical value, alpha = 0.01
MIN_ACF_REALIZATIONS = 30


def clarke_acf(R, medium: MediumParams):
    """``sinc(2 R / lambda)`` with ``sinc(x) = sin(pi x) / (pi x)``."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise DomainError("lag must be non-negative")
    return np.sinc(2.0 * R / medium.wavelength)[()]


# --- ACF --------------------------------------------------------------------


@dataclass
class AcfEstimate:
    lags: list
    values: np.ndarray
    stderr: np.ndarray
    n_realizations: int
    n_pairs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lags": [np.asarray(l, float).tolist() for l in self.lags],
            "re": np.real(self.values).tolist(),
            "im": np.imag(self.values).tolist(),
            "stderr": np.asarray(self.stderr).tolist(),
            "n_realizations": self.n_realizations,
            "n_pairs": list(self.n_pairs),
        }


def _pairs(points, d, tol):
    """Index pairs ``(i, j)`` with ``points[j] - points[i] = d``."""
    points = np.asarray(points, float)
    d = np.asarray(d, float)
    if d.size != points.shape[1]:
        raise DomainError("lag dimension does not match the points")
    tree = cKDTree(points)
    dist, j = tree.query(points + d[None, :])
    ok = dist <= tol
    return np.nonzero(ok)[0], j[ok]


def _stack(realizations):
    h = np.stack([np.asarray(r.h) for r in realizations])
    return h, realizations[0].receivers, realizations[0].sources


def _ratio_stats(num, den):
    # num, den: per-realization values; returns ratio of means and its stderr
    n = num.size
    rbar = num.mean() / den.mean()
    resid = num - rbar * den
    se = math.sqrt(float(np.mean(np.abs(resid - resid.mean()) ** 2)) / n) / abs(den.mean())
    return complex(rbar), se


def empirical_acf(realizations, lags, side: str = "receive", tol: float = 1e-9) -> AcfEstimate:
    """Normalized correlation ``E{conj(h(r, s)) h(r + dr, s + ds)} / E|h|^2``.

    ``side`` is ``"receive"`` (lags are receive displacements), ``"source"``
    or ``"joint"`` (lags are ``(dr, ds)`` pairs). All point pairs at each
    displacement contribute, and the power is pooled over every entry, so
    the zero lag is exactly one.
    """
    if side not in ("receive", "source", "joint"):
        raise DomainError(f"unknown side {side!r}")
    if len(realizations) < MIN_ACF_REALIZATIONS:
        raise DomainError(f"empirical ACF needs at least {MIN_ACF_REALIZATIONS} realizations")
    h, R, S = _stack(realizations)
    den = np.mean(np.abs(h) ** 2, axis=(1, 2))
    zero_r = np.zeros(R.shape[1])
    zero_s = np.zeros(S.shape[1])
    vals, ses, npairs = [], [], []
    for lag in lags:
        if side == "receive":
            dr, ds = lag, zero_s
        elif side == "source":
            dr, ds = zero_r, lag
        else:
            dr, ds = lag
        if not (np.any(dr) or np.any(ds)):
            vals.append(1.0 + 0j)
            ses.append(0.0)
            npairs.append(int(h.shape[1] * h.shape[2]))
            continue
        i0, i1 = _pairs(R, dr, tol)
        j0, j1 = _pairs(S, ds, tol)
        if i0.size == 0 or j0.size == 0:
            raise LookupError(f"no point pairs at displacement {lag}")
        a = h[:, i0][:, :, j0]
        b = h[:, i1][:, :, j1]
        num = np.mean(np.conj(a) * b, axis=(1, 2))
        v, se = _ratio_stats(num, den)
        vals.append(v)
        ses.append(se)
        npairs.append(int(i0.size * j0.size))
    return AcfEstimate(list(lags), np.array(vals), np.array(ses), len(realizations), npairs)


def model_covariance(factor: SpectralFactor, grid_r: DiskGrid, grid_s: DiskGrid, dr, ds) -> complex:
    """Quadrature of the 4D autocorrelation at displacement ``(dr, ds)``."""
    m = factor.medium
    dr = np.asarray(dr, float)
    ds = np.asarray(ds, float)
    er = np.exp(1j * (grid_r.kx * dr[0] + grid_r.ky * dr[1] + grid_r.gamma * dr[2])) \
        * grid_r.weights / grid_r.gamma
    es = np.exp(-1j * (grid_s.kx * ds[0] + grid_s.ky * ds[1] + grid_s.gamma * ds[2])) \
        * grid_s.weights / grid_s.gamma
    pref = (0.5 * m.kappa * m.eta) ** 2 / (2 * math.pi) ** 4
    parts = factor.separable_parts(grid_r, grid_s)
    if parts is not None:
        return complex(pref * np.sum(parts[0] ** 2 * er) * np.sum(parts[1] ** 2 * es))
    A2 = factor.on_grids(grid_r, grid_s) ** 2
    return complex(pref * (er @ A2 @ es))


def model_acf(factor, grid_r, grid_s, dr, ds=(0.0, 0.0, 0.0)) -> complex:
    return model_covariance(factor, grid_r, grid_s, dr, ds) / \
        model_covariance(factor, grid_r, grid_s, (0, 0, 0), (0, 0, 0)).real


# --- stationarity ------------------------------------------------------------


def _sample_matrix(realizations, r, s, tol=1e-9):
    return np.array([complex(x.lookup(r, s, tol)) for x in realizations])


def stationarity_test(realizations, pairs, n_sigma: float = 3.0) -> dict:
    """Compare covariances at point pairs sharing one displacement.

    ``pairs`` is a list of ``(r1, s1, r2, s2)``. The statistic is the largest
    pairwise difference between estimates in units of their combined
    standard error.
    """
    if len(pairs) < 2:
        raise DomainError("need at least two point pairs")
    disp = None
    est, se = [], []
    for r1, s1, r2, s2 in pairs:
        d = np.concatenate([np.subtract(r2, r1), np.subtract(s2, s1)])
        if disp is None:
            disp = d
        elif not np.allclose(d, disp, atol=1e-9):
            raise DomainError("all pairs must share the same displacement")
        a = _sample_matrix(realizations, r1, s1)
        b = _sample_matrix(realizations, r2, s2)
        x = np.conj(a) * b
        est.append(complex(x.mean()))
        se.append(math.sqrt(float(np.mean(np.abs(x - x.mean()) ** 2)) / x.size))
    stat = 0.0
    for i in range(len(est)):
        for j in range(i + 1, len(est)):
            den = math.hypot(se[i], se[j])
            z = abs(est[i] - est[j]) / den if den > 0 else (0.0 if est[i] == est[j] else math.inf)
            stat = max(stat, z)
    return {"test": "stationarity", "statistic": stat, "threshold": n_sigma,
            "pass": bool(stat <= n_sigma), "n": len(realizations),
            "estimates": [[e.real, e.imag] for e in est], "stderr": se}


# --- Gaussianity ----------------------------------------------------------


def ks_statistic(x, cdf) -> float:
    x = np.sort(np.asarray(x, float))
    n = x.size
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_critical(n: int) -> float:
    return KS_1PCT / math.sqrt(n)


def _standardize(x):
    sd = x.std()
    return (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)


def gaussianity_test(samples, pseudo_threshold: float = 0.05) -> dict:
    """KS tests of a circularly-symmetric complex Gaussian hypothesis.

    Checks the standardized real and imaginary marginals against N(0, 1),
    ``|h|^2 / mean`` against Exp(1), and the pseudo-covariance ratio
    ``|E h^2| / E|h|^2``.
    """
    h = np.asarray(samples, complex).ravel()
    n = h.size
    if n < 500:
        raise DomainError("gaussianity test needs at least 500 samples")
    crit = ks_critical(n)
    ks_re = ks_statistic(_standardize(h.real), ndtr)
    ks_im = ks_statistic(_standardize(h.imag), ndtr)
    p = np.abs(h) ** 2
    ks_mag = ks_statistic(p / p.mean(), lambda t: -np.expm1(-np.maximum(t, 0.0)))
    pseudo = float(abs(np.mean(h * h)) / np.mean(p))
    ok = max(ks_re, ks_im, ks_mag) <= crit and pseudo <= pseudo_threshold
    return {"test": "gaussianity", "statistic": max(ks_re, ks_im, ks_mag), "threshold": crit,
            "pass": bool(ok), "n": n, "ks_re": ks_re, "ks_im": ks_im, "ks_power": ks_mag,
            "pseudo_covariance": pseudo, "pseudo_threshold": pseudo_threshold}


# --- Weyl identity ---------------------------------------------------------


def _gl(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * (x + 1) + a, 0.5 * (b - a) * w


def weyl_integral_3d(point, medium: MediumParams, radius: float = 4.0, resolution=(512, 512)) -> complex:
    """Truncated plane-wave integral of ``exp(i kappa R) / R``.

    ``radius`` is the truncation in units of kappa. Inside the disk the
    substitution ``t = kz`` and outside ``s = |kz|`` remove the ``1/kz``
    singularity, leaving smooth integrands.
    """
    x, y, z = (float(v) for v in point)
    if z <= 0:
        raise DomainError("the plane-wave expansion needs z > 0")
    k = medium.kappa
    nt, nphi = (int(v) for v in resolution)
    phi = 2 * math.pi * np.arange(nphi) / nphi
    proj = x * np.cos(phi) + y * np.sin(phi)
    t, wt = _gl(nt, 0.0, k)
    rho = np.sqrt(k * k - t * t)
    inner = np.exp(1j * rho[:, None] * proj[None, :]) * np.exp(1j * t * z)[:, None]
    val = 1j / (2 * math.pi) * np.sum(wt[:, None] * inner) * (2 * math.pi / nphi)
    if radius > 1:
        s, ws = _gl(nt, 0.0, k * math.sqrt(radius**2 - 1))
        rho = np.sqrt(k * k + s * s)
        outer = np.exp(1j * rho[:, None] * proj[None, :]) * np.exp(-s * z)[:, None]
        val += 1 / (2 * math.pi) * np.sum(ws[:, None] * outer) * (2 * math.pi / nphi)
    return complex(val)


def weyl_integral_2d(point, medium: MediumParams, radius: float = 4.0, n: int = 512) -> complex:
    """Truncated plane-wave integral of ``H0(kappa R)``."""
    x, y = (float(v) for v in point)
    if y <= 0:
        raise DomainError("the plane-wave expansion needs y > 0")
    k = medium.kappa
    th, wth = _gl(n, 0.0, math.pi)
    val = np.sum(wth * np.exp(1j * k * (x * np.cos(th) + y * np.sin(th)))) / math.pi
    if radius > 1:
        s, ws = _gl(n, 0.0, k * math.sqrt(radius**2 - 1))
        q = np.sqrt(k * k + s * s)
        val += np.sum(ws * 2 * np.cos(q * x) * np.exp(-s * y) / q) / (1j * math.pi)
    return complex(val)


def _warn_close(offset, medium):
    if offset < 0.5 * medium.wavelength:
        warnings.warn("offset below half a wavelength: the truncation radius must grow",
                      RuntimeWarning, stacklevel=3)


def weyl_check(z_offsets, medium: MediumParams, radius: float = 4.0, resolution=(512, 512),
               xy=(0.0, 0.0)) -> float:
    """Maximum relative error of the 3D expansion over the given offsets."""
    err = 0.0
    for z in z_offsets:
        _warn_close(z, medium)
        p = (xy[0], xy[1], z)
        ref = 4 * math.pi * green3(np.array(p), medium)
        err = max(err, abs(weyl_integral_3d(p, medium, radius, resolution) - ref) / abs(ref))
    return err


def weyl_check_2d(y_offsets, medium: MediumParams, radius: float = 4.0, n: int = 512,
                  x: float = 0.0) -> float:
    err = 0.0
    for y in y_offsets:
        _warn_close(y, medium)
        ref = -4j * green2(np.array([x, y]), medium)  # H0(kappa R)
        err = max(err, abs(weyl_integral_2d((x, y), medium, radius, n) - ref) / abs(ref))
    return err


# --- far field and disk integral -----------------------------------------


def far_field_error_curve(distances, s, medium: MediumParams, direction=(0.0, 0.0, 1.0)) -> list:
    """Relative error of the far-field Green's function along ``direction``."""
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    s = np.asarray(s, float)
    out = []
    for d in distances:
        if d <= 0:
            raise DomainError("distances must be positive")
        r = d * u
        exact = green3(r - s, medium)
        out.append(float(abs(far_field_green(r, s, medium) - exact) / abs(exact)))
    return out


def disk_integral_check(grid: DiskGrid, reference: float | None = None) -> float:
    """Relative error of the ``1/gamma`` disk quadrature against ``reference``.

    The default reference is the exact value ``2 pi kappa``.
    """
    ref = 2 * math.pi * grid.medium.kappa if reference is None else float(reference)
    return abs(disk_inverse_gamma_integral(grid) - ref) / ref
