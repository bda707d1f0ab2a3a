import math

import numpy as np
import pytest
from scipy.special import j0

from emchannel.angular import Discrete, Isotropic, Mixture, VmfComponent, VmfMixture
from emchannel.errors import ConfigError, DomainError, ResourceLimitError
from emchannel.geometry import MediumParams
from emchannel.psd import Coupled, Separable, average_power, isotropic_factor, normalize_factor
from emchannel.spectral_support import DiskGrid, build_disk_grid, build_line_grid
from emchannel.synthesis import (AngularResponseGrid, CompleteKroneckerSampler, KroneckerSampler,
                                 PlanarConfig, PlanarDensity, PlanarFactor, SynthesisConfig,
                                 draw_angular_response, forward_transform, freespace_reference,
                                 generate, lsv_impulse_response, normalize_planar_factor,
                                 planar_average_power, planar_covariance, spectral_response,
                                 spectral_response_at, synthesize, synthesize_2d,
                                 synthesize_complete, synthesize_rays, system_function_shift)
from emchannel.synthesis.core import MAX_ENTRIES
from emchannel.synthesis.rng import stream
from emchannel.validation import clarke_acf, model_covariance


def line(n, d, axis=0, z=0.0):
    p = np.zeros((n, 3))
    p[:, axis] = d * np.arange(n)
    p[:, 2] += z
    return p


@pytest.fixture
def iso(medium):
    g = build_disk_grid(medium, "polar", (24, 24))
    return g, normalize_factor(isotropic_factor(medium), g, g)


def test_zero_factor_gives_zero_channel(medium):
    g = build_disk_grid(medium, "polar", (8, 8))
    cfg = SynthesisConfig(g, g, Coupled(np.zeros((g.size, g.size)), g, g), seed=1)
    h = synthesize(draw_angular_response(cfg), line(3, 0.5), line(4, 0.3))
    assert np.all(h.h == 0)


def test_single_node_variance(medium):
    k = medium.kappa
    g = DiskGrid.from_nodes(medium, [0.3 * k], [0.1 * k], [0.05])
    cfg = SynthesisConfig(g, g, isotropic_factor(medium), seed=3)
    rng = np.random.default_rng(5)
    vals = np.array([draw_angular_response(cfg, rng=rng).values[0, 0] for _ in range(10000)])
    A2 = isotropic_factor(medium).squared
    expected = (0.5 * k) ** 2 * A2 / (g.gamma[0] * g.weights[0]) ** 2
    assert np.mean(np.abs(vals) ** 2) == pytest.approx(expected, rel=0.05)
    # the channel from a single node pair is that node's weighted plane-wave product
    resp = draw_angular_response(cfg, realization=2)
    r = np.array([0.2, -0.1, 0.3])
    s = np.array([-0.4, 0.5, 0.0])
    h = synthesize(resp, s[None], r[None]).h[0, 0]
    kv = np.array([g.kx[0], g.ky[0], g.gamma[0]])
    ref = resp.values[0, 0] * g.weights[0] ** 2 * np.exp(1j * kv @ r) * np.exp(-1j * kv @ s) / (2 * math.pi) ** 2
    assert h == pytest.approx(ref, rel=1e-12)


def test_reciprocity_enforced(medium):
    g = build_disk_grid(medium, "polar", (12, 16))
    cfg = SynthesisConfig(g, g, normalize_factor(isotropic_factor(medium), g, g), seed=11,
                          enforce_reciprocity=True)
    H = draw_angular_response(cfg, realization=4).values
    perm = g.negation_permutation()
    assert np.array_equal(H, H[np.ix_(perm, perm)].T)
    resp = draw_angular_response(cfg, realization=4)
    # swapping ends mirrors z, since sources radiate up and receivers look down
    pts = np.random.default_rng(0).uniform(-1, 1, (6, 3))
    mirror = pts * [1, 1, -1]
    a = synthesize(resp, pts, pts).h
    b = synthesize(resp, mirror, mirror).h
    assert np.allclose(a, b.T, rtol=0, atol=1e-12 * np.abs(a).max())
    pts[:, 2] = 0
    h = synthesize(resp, pts, pts).h
    assert np.allclose(h, h.T, rtol=0, atol=1e-12 * np.abs(h).max())


def test_reciprocity_rejects_asymmetric_factor(medium):
    g = build_disk_grid(medium, "polar", (8, 8))
    mix = Mixture(VmfMixture((VmfComponent.from_angles(0.5, 0.0, alpha=10.0),), (1.0,)))
    cfg = SynthesisConfig(g, g, Separable(mix, Isotropic(), medium), enforce_reciprocity=True)
    with pytest.raises(ConfigError):
        draw_angular_response(cfg)


def test_spectral_response(medium, iso):
    g, f = iso
    resp = draw_angular_response(SynthesisConfig(g, g, f, seed=2))
    base = spectral_response(resp, 3, 5)
    # propagating half a wavelength at broadside flips the sign
    k = medium.kappa
    g1 = DiskGrid.from_nodes(medium, [0.0], [0.0], [1.0])
    r1 = AngularResponseGrid(np.array([[1.0 + 0j]]), g1, g1)
    assert spectral_response(r1, 0, 0, r_z=0.5) == pytest.approx(-1.0)
    assert spectral_response(r1, 0, 0, s_z=0.5) == pytest.approx(-1.0)
    assert abs(spectral_response(resp, 3, 5, r_z=0.37, s_z=-1.2)) == pytest.approx(abs(base))
    assert spectral_response_at(resp, g.kx[3], g.ky[3], g.kx[5], g.ky[5]) == base
    with pytest.raises(DomainError):
        spectral_response_at(resp, k, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        spectral_response(resp, g.size, 0)


def test_system_function_shift():
    H = lambda kx, ky, qx, qy, rz, sz: complex(kx + 2 * ky + 3 * qx + 5 * qy + 7 * rz + 11 * sz)
    assert system_function_shift(H, 0, 0, 0, 0, 0, 0) == 0
    assert system_function_shift(H, 1.0, 0.0, 0.5, 0.0, 2.0, 0.5) == H(0.5, 0.0, -0.5, 0.0, 2.0, 1.5)


def test_freespace_reference(medium):
    k, eta = medium.kappa, medium.eta
    h = freespace_reference([0, 0, 0], [[1.0, 0, 0]], medium).h[0, 0]
    assert h == pytest.approx(-1j * k * eta / (4 * math.pi * medium.wavelength))
    rng = np.random.default_rng(2)
    p = np.array([0.3, -0.2, 0.7])
    vals = []
    for r in rng.uniform(-5, 5, (10, 3)):
        real = freespace_reference((r - p)[None], r[None], medium)
        vals.append(lsv_impulse_response(real, r, p))
    assert np.ptp(np.abs(vals)) < 1e-10 and np.max(np.abs(np.array(vals) - vals[0])) < 1e-10


def test_lsv_on_demand(medium, iso):
    g, f = iso
    resp = draw_angular_response(SynthesisConfig(g, g, f, seed=9))
    real = synthesize(resp, line(2, 0.5), line(2, 0.5))
    r, p = np.array([0.5, 0, 0]), np.array([0.5, 0, 0])
    assert lsv_impulse_response(real, r, p) == real.h[1, 0]
    with pytest.raises(LookupError):
        lsv_impulse_response(real, r, [0.25, 0, 0])
    direct = synthesize(resp, (r - [0.25, 0, 0])[None], r[None]).h[0, 0]
    assert lsv_impulse_response(real, r, [0.25, 0, 0], responses=resp) == direct


def test_forward_transform_round_trip(medium):
    # 8x8 lattices at half-wavelength spacing; nodes on the reciprocal grid
    d, n = 0.5, 8
    step = 2 * math.pi / (n * d)
    m = np.arange(-3, 4)
    MX, MY = np.meshgrid(m, m, indexing="ij")
    keep = (MX**2 + MY**2) * step**2 < (medium.kappa * 0.99) ** 2
    g = DiskGrid.from_nodes(medium, step * MX[keep], step * MY[keep], np.full(keep.sum(), step**2))
    rng = np.random.default_rng(4)
    H = rng.standard_normal((g.size, g.size)) + 1j * rng.standard_normal((g.size, g.size))
    x = d * np.arange(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), np.zeros(n * n)])
    real = synthesize(AngularResponseGrid(H, g, g), pts, pts)
    back = forward_transform(real, g, g)
    assert np.max(np.abs(back - H)) / np.max(np.abs(H)) < 1e-2


def test_kronecker_matches_direct(medium):
    g = build_disk_grid(medium, "polar", (12, 12))
    mix = Mixture(VmfMixture((VmfComponent.from_angles(0.3, 0.0, alpha=4.0),), (1.0,)))
    f = normalize_factor(Separable(mix, Isotropic(), medium), g, g)
    R, S = line(3, 0.25), line(2, 0.5, axis=1)
    ks = KroneckerSampler(f, g, g, R, S, seed=0)
    for (i, j, k, l) in [(0, 0, 0, 0), (0, 0, 2, 1), (1, 1, 2, 0)]:
        ref = model_covariance(f, g, g, R[k] - R[i], S[l] - S[j])
        assert ks.covariance(i, j, k, l) == pytest.approx(ref, rel=1e-9, abs=1e-12)
    cfg = SynthesisConfig(g, g, f, seed=21)
    n = 2000
    hs = np.array([r.h for r in generate(cfg, S, R, n, engine="direct", threads=1)])
    hk = np.array([r.h for r in generate(cfg, S, R, n, engine="kronecker", threads=1)])
    for h in (hs, hk):
        c = np.mean(np.conj(h[:, 0, 0]) * h[:, 2, 1])
        se = np.std(np.conj(h[:, 0, 0]) * h[:, 2, 1]) / math.sqrt(n)
        assert abs(c - ks.covariance(0, 0, 2, 1)) < 4 * se


def test_complete_model(medium):
    gains = ((0.25, 0.25), (0.25, 0.25))
    S = np.zeros((1, 3))
    small = build_disk_grid(medium, "polar", (8, 8))
    fs = normalize_factor(isotropic_factor(medium), small, small)
    cfg = SynthesisConfig(small, small, fs, seed=8, model="complete3d", block_gains=gains)
    h = np.array([synthesize_complete(cfg, S, S, realization=i).h[0, 0] for i in range(1000)])
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.1)
    g = build_disk_grid(medium, "polar", (24, 24))
    f = normalize_factor(isotropic_factor(medium), g, g)
    # up- and downgoing receive waves with equal gains: the z correlation is the
    # real full-sphere value, sinc(2 dz / lambda)
    R = line(5, 0.2, axis=2)
    cks = CompleteKroneckerSampler(f, g, g, R, S, gains)
    c0 = cks.covariance(0, 0, 0, 0).real
    for k in range(1, 5):
        c = cks.covariance(0, 0, k, 0) / c0
        assert c.real == pytest.approx(clarke_acf(0.2 * k, medium), abs=0.02)
        assert abs(c.imag) < 1e-9
    scalar = KroneckerSampler(f, g, g, R, S)
    assert abs(scalar.covariance(0, 0, 2, 0).imag) > 0.1 * scalar.covariance(0, 0, 0, 0).real


def test_complete_reduces_to_scalar(medium, iso):
    g, f = iso
    S, R = line(2, 0.5), line(3, 0.25)
    a = synthesize_complete(SynthesisConfig(g, g, f, seed=4, model="complete3d",
                                            block_gains=((1, 0), (0, 0))), S, R, realization=3)
    b = synthesize(draw_angular_response(SynthesisConfig(g, g, f, seed=4), realization=3), S, R)
    assert np.array_equal(a.h, b.h)
    with pytest.raises(ConfigError):
        synthesize_complete(SynthesisConfig(g, g, f, model="complete3d",
                                            block_gains=((0, 0), (0, 0))), S, R)


def test_complete_kronecker_covariance(medium):
    g = build_disk_grid(medium, "polar", (8, 8))
    f = normalize_factor(isotropic_factor(medium), g, g)
    R, S = line(2, 0.3, axis=2), line(2, 0.4)
    gains = ((0.5, 0.1), (0.3, 0.1))
    cks = CompleteKroneckerSampler(f, g, g, R, S, gains, seed=1)
    cfg = SynthesisConfig(g, g, f, seed=1, model="complete3d", block_gains=gains)
    n = 2000
    h = np.array([synthesize_complete(cfg, S, R, realization=i).h for i in range(n)])
    x = np.conj(h[:, 0, 0]) * h[:, 1, 1]
    assert abs(x.mean() - cks.covariance(0, 0, 1, 1)) < 4 * np.std(x) / math.sqrt(n)


def _planar(medium, mode, n=256, region=None):
    g = build_line_grid(medium, mode, n, rim_cut=1e-6 * medium.kappa)
    dens = PlanarDensity("piecewise", (region,)) if region else PlanarDensity()
    return g, normalize_planar_factor(PlanarFactor(dens, medium), g, g)


def test_planar_power(medium):
    half = ((0.0, math.pi / 2), (0.0, math.pi / 2))
    g, f = _planar(medium, "polar", region=half)
    cfg = PlanarConfig(g, g, f, seed=3)
    S = np.zeros((1, 2))
    h = np.array([synthesize_2d(cfg, S, S, i).h[0, 0] for i in range(2000)])
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.05)
    raw = PlanarFactor(PlanarDensity("piecewise", (half,)), medium)
    assert planar_average_power(raw, g, g) == pytest.approx(1.0, rel=1e-2)


def test_planar_acf_grids_agree(medium):
    lags = np.array([0.25, 0.5, 1.0])
    S = np.zeros((1, 2))
    R = np.column_stack([np.concatenate([[0.0], lags]), np.zeros(4)])
    est = {}
    for mode in ("polar", "cosine"):
        g, f = _planar(medium, mode, n=128 if mode == "polar" else 256)
        model = np.array([planar_covariance(f, g, g, R[0], S[0], R[i], S[0]) for i in range(1, 4)])
        p0 = planar_covariance(f, g, g, R[0], S[0], R[0], S[0]).real
        assert np.allclose((model / p0).real, j0(medium.kappa * lags), atol=0.03)
        h = np.array([synthesize_2d(PlanarConfig(g, g, f, seed=6), S, R, i).h[:, 0] for i in range(1500)])
        est[mode] = (np.conj(h[:, :1]) * h[:, 1:]).mean(0) / np.mean(np.abs(h[:, 0]) ** 2)
    assert np.max(np.abs(est["polar"] - est["cosine"])) < 0.1
    assert np.max(np.abs(est["polar"].real - j0(medium.kappa * lags))) < 0.1


def test_rays_bound(medium):
    rng = np.random.default_rng(1)
    dirs = rng.standard_normal((5, 2, 3))
    dirs[..., 2] = np.abs(dirs[..., 2])
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    gains = rng.random(5)
    d = Discrete(dirs, gains)
    pts = rng.uniform(-3, 3, (20, 3))
    for i in range(10):
        h = synthesize_rays(d, pts, pts, medium, seed=2, realization=i).h
        assert np.all(np.abs(h) <= np.sqrt(d.gains).sum() + 1e-12)
    with pytest.raises(ConfigError):
        synthesize_rays(Discrete(dirs[:, 0], gains), pts, pts, medium)


def test_resource_guard(medium):
    g = build_disk_grid(medium, "polar", (64, 64))
    pts = np.zeros((MAX_ENTRIES // g.size + 1, 3))
    resp = AngularResponseGrid(np.zeros((g.size, g.size), complex), g, g)
    with pytest.raises(ResourceLimitError):
        synthesize(resp, pts[:1], pts)


def test_determinism_across_threads(medium, iso):
    g, f = iso
    cfg = SynthesisConfig(g, g, f, seed=77)
    R, S = line(4, 0.25), line(3, 0.5)
    a = generate(cfg, S, R, 12, engine="direct", threads=1)
    b = generate(cfg, S, R, 12, engine="direct", threads=4)
    c = generate(cfg, S, R, 4, engine="direct", threads=2, start=8)
    assert all(np.array_equal(x.h, y.h) for x, y in zip(a, b))
    assert all(np.array_equal(x.h, y.h) for x, y in zip(a[8:], c))
    assert not np.array_equal(a[0].h, a[1].h)
    with pytest.raises(ConfigError):
        generate(cfg, S, R, 0)
    with pytest.raises(ConfigError):
        generate(cfg, S, R, 1, engine="warp")


def test_stream_keys_independent():
    a = stream(1, 0, 0).standard_normal(4)
    assert np.array_equal(a, stream(1, 0, 0).standard_normal(4))
    for other in (stream(2, 0, 0), stream(1, 1, 0), stream(1, 0, 1)):
        assert not np.array_equal(a, other.standard_normal(4))


def test_rim_cut_convergence(medium):
    # the retained disk ends at gamma_min = sqrt(2 kappa c - c^2), and uniform-in-gamma
    # quadrature of the isotropic PSD leaves exactly (1 - gamma_min / kappa)^2
    k = medium.kappa
    f = isotropic_factor(medium)
    errs = []
    for cut in (1e-2, 1e-4, 1e-6):
        c = cut * k
        g = build_disk_grid(medium, "polar", (64, 32), rim_cut=c)
        expected = 1 - (1 - math.sqrt(2 * k * c - c * c) / k) ** 2
        err = 1.0 - average_power(f, g, g)
        assert err == pytest.approx(expected, rel=1e-6)
        errs.append(err)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 3e-3
