"""Stationary scalar model: angular-response draws and plane-wave synthesis.

Discretization
--------------
The channel is evaluated as the double quadrature

    h(r, s) = (2 pi)^-2 sum_{m,n} a_r(k_m, r) H[m, n] a_s(q_n, s) w_m v_n

over receive nodes ``k_m`` (weights ``w_m``) and source nodes ``q_n``
(weights ``v_n``). Each cell must carry variance ``S w v / (2 pi)^4``, so the
stored response is

    H[m, n] = (kappa eta / 2) A[m, n] W[m, n] / sqrt(gamma_m gamma_n w_m v_n)

with ``W`` i.i.d. CN(0, 1). The expected power is then exactly the
quadrature power returned by :func:`emchannel.psd.average_power`.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import ConfigError, DomainError, ResourceLimitError
from ..geometry import MediumParams, freespace_kernel
from ..psd import SpectralFactor
from ..spectral_support import DiskGrid
from .rng import complex_normal, stream

MAX_ENTRIES = 2**28
MODELS = ("scalar3d", "complete3d", "scalar2d")


def _guard(*shape):
    n = 1
    for s in shape:
        n *= int(s)
    if n > MAX_ENTRIES:
        raise ResourceLimitError(f"array of shape {shape} exceeds the 2^28-entry guard")


def as_points(points, dim=3) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] != dim:
        raise DomainError(f"points must have shape (P, {dim}), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise DomainError("points must be finite")
    return p


@dataclass(frozen=True, eq=False)
class SynthesisConfig:
    """Everything needed to draw angular responses reproducibly."""

    grid_receive: DiskGrid
    grid_source: DiskGrid
    factor: SpectralFactor
    seed: int = 0
    enforce_reciprocity: bool = False
    model: str = "scalar3d"
    block_gains: tuple = ((0.25, 0.25), (0.25, 0.25))

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.grid_receive.medium != self.grid_source.medium:
            raise ConfigError("source and receive grids must share the medium")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def medium(self) -> MediumParams:
        return self.grid_receive.medium


@dataclass(frozen=True, eq=False)
class AngularResponseGrid:
    """One draw of the angular response on a receive x source node product."""

    values: np.ndarray
    grid_receive: DiskGrid
    grid_source: DiskGrid
    seed: int = 0
    realization: int = 0
    block: int = 0

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.grid_receive.weights, self.grid_source.weights)

    @property
    def medium(self) -> MediumParams:
        return self.grid_receive.medium


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Channel matrix ``h[i, j] = h(receivers[i], sources[j])``."""

    h: np.ndarray
    receivers: np.ndarray
    sources: np.ndarray
    seed: int | None = None
    realization: int | None = None
    config_hash: str = ""
    meta: dict = field(default_factory=dict)

    def _index(self, pts, p, tol):
        d = np.linalg.norm(pts - np.asarray(p, float)[None, :], axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None

    def lookup(self, r, s, tol=1e-9):
        i = self._index(self.receivers, r, tol)
        j = self._index(self.sources, s, tol)
        if i is None or j is None:
            raise LookupError("point not present in this realization")
        return self.h[i, j]


def config_hash(payload) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()


def _symmetric_noise(W, perm):
    # W'[m, n] = W[perm[n], perm[m]]; average with W and keep unit variance.
    # On fixed pairs (n == perm[m]) the draw is already symmetric.
    Wt = W[np.ix_(perm, perm)].T
    out = (W + Wt) * (1.0 / math.sqrt(2.0))
    m = np.arange(W.shape[0])
    out[m, perm] = W[m, perm]
    return out


def _reciprocity_perm(config: SynthesisConfig):
    gr, gs = config.grid_receive, config.grid_source
    if gr.size != gs.size or not (np.array_equal(gr.kx, gs.kx) and np.array_equal(gr.ky, gs.ky)
                                  and np.array_equal(gr.weights, gs.weights)):
        raise ConfigError("reciprocity needs identical source and receive grids")
    perm = gr.negation_permutation()
    if perm is None:
        raise ConfigError("reciprocity needs a grid closed under negation")
    return perm


def draw_angular_response(config: SynthesisConfig, rng: np.random.Generator | None = None,
                          realization: int = 0, block: int = 0,
                          factor: SpectralFactor | None = None) -> AngularResponseGrid:
    """Draw ``H`` on the configured grids.

    Without an explicit ``rng`` the stream is keyed by
    ``(config.seed, realization, block)``.
    """
    gr, gs = config.grid_receive, config.grid_source
    _guard(gr.size, gs.size)
    factor = config.factor if factor is None else factor
    if rng is None:
        rng = stream(config.seed, realization, block)
    m = config.medium
    A = factor.on_grids(gr, gs)
    W = complex_normal(rng, (gr.size, gs.size))
    if config.enforce_reciprocity:
        perm = _reciprocity_perm(config)
        At = A[np.ix_(perm, perm)].T
        if not np.allclose(A, At, rtol=1e-9, atol=1e-12 * max(float(A.max()), 1e-300)):
            raise ConfigError("spectral factor is not symmetric under (k, q) -> (-q, -k)")
        A = 0.5 * (A + At)
        W = _symmetric_noise(W, perm)
    dr = 1.0 / np.sqrt(gr.gamma * gr.weights)
    ds = 1.0 / np.sqrt(gs.gamma * gs.weights)
    D = np.outer(dr, ds)
    H = (0.5 * m.kappa * m.eta) * A * W * D
    return AngularResponseGrid(H, gr, gs, config.seed, realization, block)


def _phase_matrix(grid: DiskGrid, pts: np.ndarray, sign: int, branch: int) -> np.ndarray:
    # exp(sign * i (kx x + ky y + branch * gamma z)), shape (P, M)
    phase = np.outer(pts[:, 0], grid.kx) + np.outer(pts[:, 1], grid.ky) \
        + branch * np.outer(pts[:, 2], grid.gamma)
    return np.exp((1j * sign) * phase)


def synthesize(responses: AngularResponseGrid, sources, receivers,
               receive_branch: int = 1, source_branch: int = 1) -> ChannelRealization:
    """Evaluate the plane-wave double sum at every (receiver, source) pair.

    Cost is ``O(P_r M_r M_s + P_r M_s P_s)`` via two matrix products.
    ``receive_branch``/``source_branch`` select up- (+1) or downgoing (-1)
    longitudinal components.
    """
    R = as_points(receivers)
    S = as_points(sources)
    gr, gs = responses.grid_receive, responses.grid_source
    _guard(R.shape[0], gr.size)
    _guard(S.shape[0], gs.size)
    _guard(R.shape[0], gs.size)
    Br = _phase_matrix(gr, R, +1, receive_branch) * gr.weights
    Bs = _phase_matrix(gs, S, -1, source_branch) * gs.weights
    h = (Br @ responses.values) @ Bs.T
    h *= 1.0 / (2.0 * math.pi) ** 2
    return ChannelRealization(h, R, S, responses.seed, responses.realization)


def synthesize_realization(config: SynthesisConfig, sources, receivers,
                           realization: int = 0) -> ChannelRealization:
    """Draw and synthesize realization number ``realization`` of the scalar model."""
    resp = draw_angular_response(config, realization=realization)
    return synthesize(resp, sources, receivers)


def inject_evanescent_node(responses: AngularResponseGrid, kx: float, ky: float = 0.0,
                           power: float = 1.0, seed: int = 0) -> AngularResponseGrid:
    """Append one off-disk receive node carrying noise of the given power.

    The appended node decays along ``z`` and makes the field non-stationary;
    it exists to exercise the stationarity test.
    """
    gr = responses.grid_receive
    m = gr.medium
    if kx**2 + ky**2 <= m.kappa**2:
        raise DomainError("injected node must lie outside the disk")
    gs = responses.grid_source
    rng = stream(seed, responses.realization, 99)
    w_new = 1.0
    # choose the row so that its power at z = 0 is `power` for a source at the origin
    row = complex_normal(rng, (1, gs.size)) * math.sqrt(power) * (2 * math.pi) ** 2 \
        / (np.sqrt(gs.size) * gs.weights)
    grid = _ExtendedGrid(gr, kx, ky, w_new)
    values = np.concatenate([responses.values, row], axis=0)
    return AngularResponseGrid(values, grid, gs, responses.seed, responses.realization,
                               responses.block)


class _ExtendedGrid:
    """Disk grid plus one evanescent node, for counterexample construction."""

    def __init__(self, base: DiskGrid, kx, ky, w):
        self.medium = base.medium
        self.kx = np.append(base.kx, kx)
        self.ky = np.append(base.ky, ky)
        self.weights = np.append(base.weights, w)
        q = self.medium.kappa**2 - self.kx**2 - self.ky**2
        # off-disk longitudinal wavenumber i|gamma|: the phase term gains -|gamma| z
        self._kz = np.where(q >= 0, np.sqrt(np.abs(q)) + 0j, 1j * np.sqrt(np.abs(q)))

    @property
    def size(self):
        return self.kx.size

    @property
    def gamma(self):
        return self._kz


def spectral_response(responses: AngularResponseGrid, m: int, n: int,
                      r_z: float = 0.0, s_z: float = 0.0) -> complex:
    """``H[m, n]`` propagated to the planes ``z = r_z`` (receive) and ``s_z`` (source)."""
    gr, gs = responses.grid_receive, responses.grid_source
    if not (0 <= m < gr.size and 0 <= n < gs.size):
        raise DomainError("node index outside the grid")
    return complex(responses.values[m, n] * np.exp(1j * (gr.gamma[m] * r_z - gs.gamma[n] * s_z)))


def _node_index(grid: DiskGrid, x, y):
    m = grid.medium
    if x * x + y * y >= m.kappa**2:
        raise DomainError("wavenumber outside the support disk")
    tree = cKDTree(np.stack([grid.kx, grid.ky], axis=-1))
    d, i = tree.query([x, y])
    if d > 1e-9 * m.kappa:
        raise DomainError("wavenumber is not a grid node")
    return int(i)


def spectral_response_at(responses: AngularResponseGrid, kx, ky, qx, qy,
                         r_z: float = 0.0, s_z: float = 0.0) -> complex:
    """:func:`spectral_response` addressed by wavenumbers instead of indices."""
    m = _node_index(responses.grid_receive, kx, ky)
    n = _node_index(responses.grid_source, qx, qy)
    return spectral_response(responses, m, n, r_z, s_z)


def system_function_shift(H, kx, ky, qx, qy, r_z, s_z):
    """Spectral response of the impulse-response form.

    ``C(k, q; r_z, s_z) = H(k - q, -q; r_z, r_z - s_z)`` where ``H`` is either
    a callable ``H(kx, ky, qx, qy, r_z, s_z)`` or an :class:`AngularResponseGrid`.
    """
    if isinstance(H, AngularResponseGrid):
        grid = H
        H = lambda a, b, c, d, rz, sz: spectral_response_at(grid, a, b, c, d, rz, sz)
    return H(kx - qx, ky - qy, -qx, -qy, r_z, r_z - s_z)


def forward_transform(real: ChannelRealization, grid_r: DiskGrid, grid_s: DiskGrid) -> np.ndarray:
    """Recover the angular response from samples of ``h`` on planar lattices.

    Discrete counterpart of the spatial-to-spectral transform at ``z = 0``.
    Exact when the receive and source nodes lie on the reciprocal grids of
    the periodic sampling lattices and inside their Nyquist bands.
    """
    R, S = real.receivers, real.sources
    Fr = np.exp(-1j * (np.outer(grid_r.kx, R[:, 0]) + np.outer(grid_r.ky, R[:, 1])))
    Fs = np.exp(1j * (np.outer(S[:, 0], grid_s.kx) + np.outer(S[:, 1], grid_s.ky)))
    scale = (2 * math.pi) ** 2 / (R.shape[0] * S.shape[0])
    return (Fr @ real.h @ Fs) * scale / np.outer(grid_r.weights, grid_s.weights)


def mixed_response_source(responses: AngularResponseGrid, r, qx, qy, s_z,
                          offsets, offset_weights) -> complex:
    """``C(r, q; s_z)``: quadrature of ``c(r, p) exp(i q.p)`` over planar offsets.

    ``offsets`` are transverse displacements ``p``; the source sits at
    ``r - p`` on the plane ``z = s_z``.
    """
    r = np.asarray(r, float)
    p = np.asarray(offsets, float)
    src = np.column_stack([r[0] - p[:, 0], r[1] - p[:, 1], np.full(p.shape[0], s_z)])
    h = synthesize(responses, src, r[None, :]).h[0]
    return complex(np.sum(h * np.exp(1j * (qx * p[:, 0] + qy * p[:, 1])) * offset_weights))


def mixed_response_receive(responses: AngularResponseGrid, kx, ky, s, r_z,
                           points, point_weights) -> complex:
    """``C(k, s; r_z)``: quadrature of ``h(r, s) exp(-i k.r)`` over a receive plane."""
    pts = np.asarray(points, float)
    R = np.column_stack([pts[:, 0], pts[:, 1], np.full(pts.shape[0], r_z)])
    h = synthesize(responses, np.asarray(s, float)[None, :], R).h[:, 0]
    return complex(np.sum(h * np.exp(-1j * (kx * pts[:, 0] + ky * pts[:, 1])) * point_weights))


def lsv_impulse_response(real: ChannelRealization, r, p, responses: AngularResponseGrid | None = None):
    """``c(r, p) = h(r, r - p)``.

    Looks the pair up in ``real``; when it is missing and ``responses`` is
    given, synthesizes it on demand.
    """
    r = np.asarray(r, float)
    s = r - np.asarray(p, float)
    try:
        return complex(real.lookup(r, s))
    except LookupError:
        if responses is None:
            raise
        return complex(synthesize(responses, s[None, :], r[None, :]).h[0, 0])


def freespace_reference(sources, receivers, medium: MediumParams) -> ChannelRealization:
    """Deterministic line-of-sight channel ``-i kappa eta green3(r - s)``."""
    R = as_points(receivers)
    S = as_points(sources)
    _guard(R.shape[0], S.shape[0])
    h = freespace_kernel(R[:, None, :] - S[None, :, :], medium)
    return ChannelRealization(np.asarray(h).reshape(R.shape[0], S.shape[0]), R, S, meta={"model": "freespace"})
