import math

import numpy as np
import pytest
from scipy.special import ndtr

from emchannel.angular import (Discrete, Isotropic, Mixture, Piecewise, VmfComponent, VmfMixture,
                               alpha_from_variance, check_normalization, circular_variance,
                               fig8b_preset, fig8c_preset, hemisphere_quadrature,
                               lower_hemisphere_mass, mean_resultant, mixture_pdf, sample_direction,
                               sample_directions, vmf_moments, vmf_norm_const, vmf_pdf,
                               vmf_pdf_hemisphere)
from emchannel.errors import DomainError
from emchannel.geometry import spherical_to_cosine
from emchannel.spectral_support import AngularRegionSet, Rect
from emchannel.validation import ks_critical, ks_statistic

Z = np.array([0.0, 0.0, 1.0])


def test_norm_const():
    assert vmf_norm_const(0.0) == pytest.approx(1 / (4 * math.pi))
    assert vmf_norm_const(1e-9) == pytest.approx(0.07958, abs=1e-5)
    assert vmf_norm_const(1.0) == pytest.approx(1 / (4 * math.pi * math.sinh(1)))
    assert vmf_norm_const(1.0) == pytest.approx(0.06772, abs=1e-5)
    assert vmf_norm_const(10.0) == pytest.approx(7.23e-5, rel=1e-3)


def test_vmf_pdf_values():
    iso = VmfComponent(Z, 0.0)
    for d in (Z, spherical_to_cosine(1.0, 2.0)):
        assert vmf_pdf(d, iso) == pytest.approx(1 / (4 * math.pi))
    c = VmfComponent(Z, 1.0)
    assert vmf_pdf(Z, c) == pytest.approx(vmf_norm_const(1.0) * math.e)
    assert vmf_pdf(Z, c) == pytest.approx(0.1841, abs=1e-4)


def test_vmf_pdf_spherical_form():
    # c(a) exp(a [sin t sin tm cos(p - pm) + cos t cos tm])
    tm, pm, a = math.radians(45), 0.0, 5.0
    t, p = math.radians(30), math.radians(45)
    comp = VmfComponent(spherical_to_cosine(tm, pm), a)
    expected = vmf_norm_const(a) * math.exp(a * (math.sin(t) * math.sin(tm) * math.cos(p - pm)
                                                 + math.cos(t) * math.cos(tm)))
    assert vmf_pdf(spherical_to_cosine(t, p), comp) == pytest.approx(expected, rel=1e-12)


def test_mixture_pdf_degenerate_cases():
    c = VmfComponent.from_angles(0.5, 1.0, alpha=4.0)
    d = spherical_to_cosine(np.linspace(0, 1.5, 7), np.linspace(0, 6, 7))
    assert np.allclose(mixture_pdf(d, VmfMixture((c,), (1.0,))), vmf_pdf(d, c))
    assert np.allclose(mixture_pdf(d, VmfMixture((c, c), (0.5, 0.5))), vmf_pdf(d, c))
    with pytest.raises(DomainError):
        VmfMixture((c, c), (0.5, 0.6))


def test_fig8c_preset_integrates_to_one():
    m = fig8c_preset()
    comps = m.mixture.components
    assert len(comps) == 3 and np.allclose(m.mixture.weights, 1 / 3)
    angles = [(45, 0), (50, 90), (20, 130)]
    for c, (t, p) in zip(comps, angles):
        assert np.allclose(c.mu, spherical_to_cosine(math.radians(t), math.radians(p)))
    for c, v in zip(comps, (0.01, 0.02, 0.004)):
        assert circular_variance(c.alpha) == pytest.approx(v, abs=1e-10)
    assert check_normalization(m) <= 1e-6


def test_mean_resultant_and_variance():
    assert mean_resultant(0.0) == 0.0
    assert mean_resultant(1.0) == pytest.approx(1 / math.tanh(1) - 1)
    assert mean_resultant(1.0) == pytest.approx(0.3130, abs=1e-4)
    assert mean_resultant(1e6) == pytest.approx(1.0, abs=1e-5)
    # series branch joins the closed form
    assert mean_resultant(0.999e-3) == pytest.approx(mean_resultant(1.001e-3), rel=5e-3)
    assert circular_variance(0.0) == 1.0
    assert circular_variance(1e8) == pytest.approx(0.0, abs=1e-7)
    assert circular_variance(1.0) == pytest.approx(0.9020, abs=1e-4)


def test_alpha_from_variance():
    assert alpha_from_variance(1.0) == 0.0
    assert alpha_from_variance(float(circular_variance(1.0))) == pytest.approx(1.0, rel=1e-9)
    a = alpha_from_variance(0.01)
    assert abs(circular_variance(a) - 0.01) <= 1e-10
    for bad in (0.0, -0.1, 1.2):
        with pytest.raises(DomainError):
            alpha_from_variance(bad)


@pytest.mark.parametrize("alpha", [1e-9, 1.0, 10.0, 100.0])
def test_normalization_hemisphere(alpha):
    comp = VmfComponent.from_angles(math.radians(45), 0.3, alpha=alpha)
    assert check_normalization(Mixture(VmfMixture((comp,), (1.0,)))) <= 1e-6


def test_normalization_other_variants():
    assert check_normalization(Isotropic()) <= 1e-12
    assert check_normalization(Isotropic(full_sphere=True)) == pytest.approx(0.5, abs=1e-12)
    comp = VmfComponent.from_angles(math.radians(45), 0.0, alpha=5.0)
    assert check_normalization(Mixture(VmfMixture((comp,), (1.0,)))) <= 1e-6
    pw = Piecewise(AngularRegionSet((Rect(0.1, 0.7, 0.5, 2.0),)))
    assert check_normalization(pw) <= 1e-6
    assert check_normalization(Discrete([Z, [1, 0, 1]], [3.0, 1.0])) <= 1e-15


def test_piecewise_raster_measure():
    rect = Rect(0.1, 0.7, 0.5, 2.0)
    exact = (math.cos(0.1) - math.cos(0.7)) * 1.5
    assert AngularRegionSet((rect,)).solid_angle() == pytest.approx(exact, rel=5e-3)
    pw = Piecewise(AngularRegionSet((rect,)))
    assert pw.pdf(spherical_to_cosine(0.4, 1.0)) == pytest.approx(1 / exact, rel=5e-3)
    assert pw.pdf(spherical_to_cosine(0.4, 3.0)) == 0.0


def test_full_sphere_mixture_loses_lower_mass():
    comp = VmfComponent.from_angles(math.radians(80), 0.0, alpha=2.0)
    lit = Mixture(VmfMixture((comp,), (1.0,)), full_sphere=True)
    # full-sphere constant on the upper hemisphere misses exactly the lower mass
    assert check_normalization(lit) == pytest.approx(lower_hemisphere_mass(comp), abs=1e-9)
    assert lower_hemisphere_mass(VmfComponent(Z, 50.0)) < 1e-15


def test_hemisphere_pdf_matches_full_sphere_for_upright_concentrated():
    comp = VmfComponent(Z, 40.0)
    d = spherical_to_cosine(np.linspace(0, 1.2, 5), 0.0)
    assert np.allclose(vmf_pdf_hemisphere(d, comp), vmf_pdf(d, comp), rtol=1e-12)


def test_rotational_symmetry():
    comp = VmfComponent.from_angles(0.6, 1.0, alpha=7.0)
    mu = comp.mu
    # rotate a direction about mu: same inner product
    e1 = np.cross(mu, [0, 0, 1.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(mu, e1)
    t = 0.9
    a = t * mu + math.sqrt(1 - t * t) * (math.cos(0.3) * e1 + math.sin(0.3) * e2)
    b = t * mu + math.sqrt(1 - t * t) * (math.cos(2.0) * e1 + math.sin(2.0) * e2)
    assert vmf_pdf(a, comp) == pytest.approx(vmf_pdf(b, comp), rel=1e-13)


def test_moments_sphere():
    m, C = vmf_moments(VmfComponent(Z, 0.0))
    assert np.allclose(m, 0)
    assert np.allclose(C, np.eye(3) / 3)
    m, C = vmf_moments(VmfComponent(Z, 1e7))
    assert np.allclose(C, 0, atol=1e-6)
    m, C = vmf_moments(VmfComponent(Z, 1.0))
    assert np.allclose(C, np.diag(np.diag(C)), atol=1e-15)
    assert C[0, 0] == pytest.approx(C[1, 1])
    # full-sphere identity E{t^2} = 1 - 2 E{t} / alpha
    et = mean_resultant(1.0)
    assert C[2, 2] + et**2 == pytest.approx(1 - 2 * et, rel=1e-10)
    assert np.trace(C) == pytest.approx(circular_variance(1.0), rel=1e-10)


def test_moments_hemisphere_support():
    comp = VmfComponent(Z, 100.0)
    ms, Cs = vmf_moments(comp, "sphere")
    mh, Ch = vmf_moments(comp, "hemisphere")
    assert np.allclose(ms, mh, atol=1e-8) and np.allclose(Cs, Ch, atol=1e-8)
    tilted = VmfComponent.from_angles(math.radians(80), 0.0, alpha=2.0)
    mh, _ = vmf_moments(tilted, "hemisphere")
    ms, _ = vmf_moments(tilted, "sphere")
    assert mh[2] > ms[2]  # truncation pulls the mean up


def test_isotropic_sampling(rng):
    x = sample_directions(Isotropic(), 100_000, rng)
    assert np.all(x[:, 2] >= 0)
    assert np.linalg.norm(x[:, :2].mean(0)) <= 0.02
    # hemisphere-uniform: z is uniform on [0, 1]
    assert abs(x[:, 2].mean() - 0.5) <= 3 * math.sqrt(1 / 12 / x.shape[0])


def test_discrete_sampling(rng):
    d = Discrete([0.3, 0.4, 0.866], [1.0])
    x = sample_directions(d, 10, rng)
    assert np.allclose(x, d.directions[0])
    assert np.allclose(Discrete([Z, Z], [1, 1]).gains, [0.5, 0.5])


def test_vmf_sampling_mean(rng):
    comp = VmfComponent(Z, 10.0)
    x = sample_directions(Mixture(VmfMixture((comp,), (1.0,))), 100_000, rng)
    assert abs(x[:, 2].mean() - (1 / math.tanh(10) - 0.1)) <= 0.01


@pytest.mark.parametrize("alpha", [1.0, 10.0, 100.0])
def test_vmf_sampling_ks(rng, alpha):
    # oracle: t = z restricted to [0, 1] has CDF (e^{a t} - 1) / (e^a - 1)
    comp = VmfComponent(Z, alpha)
    t = sample_directions(Mixture(VmfMixture((comp,), (1.0,))), 100_000, rng)[:, 2]
    def cdf(u):
        u = np.clip(u, 0.0, 1.0)
        return (np.exp(alpha * (u - 1.0)) - math.exp(-alpha)) / (1.0 - math.exp(-alpha))

    assert ks_statistic(t, cdf) <= ks_critical(t.size)


def test_sample_single_direction(rng):
    d = sample_direction(fig8b_preset(), rng)
    assert d.shape == (3,) and d[2] >= 0


def test_hemisphere_quadrature_weights():
    _, w = hemisphere_quadrature((64, 128))
    assert w.sum() == pytest.approx(2 * math.pi, rel=1e-13)


def test_component_validation():
    with pytest.raises(DomainError):
        VmfComponent(Z, -1.0)
    with pytest.raises(DomainError):
        VmfComponent([0, 0, 0], 1.0)
    with pytest.raises(DomainError):
        VmfComponent.from_angles(0.1, 0.1)
    with pytest.raises(DomainError):
        Discrete([0, 0, -1.0], [1.0])
