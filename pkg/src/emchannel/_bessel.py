"""Order-zero Bessel functions of the first and second kind.

Ascending power series below ``SERIES_LIMIT`` and the Hankel asymptotic
expansion above it. Only real positive arguments are needed here.
"""
from __future__ import annotations

import numpy as np

SERIES_LIMIT = 12.0
_EULER_GAMMA = 0.57721566490153286061


def _series(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    j0 = np.ones_like(x)
    harm = 0.0
    ysum = np.zeros_like(x)
    for k in range(1, 120):
        term = -term * q / (k * k)
        harm += 1.0 / k
        j0 = j0 + term
        ysum = ysum - harm * term
        if np.all(np.abs(term) * (1.0 + harm) < 1e-17 * np.maximum(np.abs(j0), 1e-300)):
            break
    y0 = (2.0 / np.pi) * ((np.log(0.5 * x) + _EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _asymptotic(x):
    # H0(x) ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum_k i^k a_k / x^k
    total = np.ones_like(x, dtype=complex)
    term = np.ones_like(x, dtype=complex)
    last = np.full(x.shape, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 60):
        term = term * 1j * (-((2 * k - 1) ** 2)) / (8.0 * k * x)
        size = np.abs(term)
        active &= size < last
        total = np.where(active, total + term, total)
        last = np.where(active, size, last)
        if not active.any():
            break
    h0 = np.sqrt(2.0 / (np.pi * x)) * np.exp(1j * (x - 0.25 * np.pi)) * total
    return h0.real, h0.imag


def j0_y0(x):
    """Return ``(J0(x), Y0(x))`` for real ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Bessel argument must be positive")
    flat = np.atleast_1d(x).ravel()
    j = np.empty_like(flat)
    y = np.empty_like(flat)
    small = flat < SERIES_LIMIT
    if small.any():
        j[small], y[small] = _series(flat[small])
    if (~small).any():
        j[~small], y[~small] = _asymptotic(flat[~small])
    return j.reshape(x.shape), y.reshape(x.shape)


def hankel1_0(x):
    """First-kind Hankel function of order zero, ``J0 + i Y0``."""
    j, y = j0_y0(x)
    return j + 1j * y
