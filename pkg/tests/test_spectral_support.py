import json
import math

import numpy as np
import pytest

from emchannel.errors import ConfigError, DomainError
from emchannel.geometry import MediumParams
from emchannel.spectral_support import (AngularRegionSet, Cap, DiskGrid, Rect, bandwidth_isotropic,
                                        bandwidth_regions, build_disk_grid, build_line_grid,
                                        disk_inverse_gamma_integral, dof_planar_loss_ratio,
                                        dof_segment, evanescent_power_loss,
                                        evanescent_power_loss_db)


def test_bandwidth_isotropic():
    assert bandwidth_isotropic(MediumParams.from_kappa(1.0)) == pytest.approx(math.pi, rel=1e-15)
    assert bandwidth_isotropic(MediumParams(0.1)) == pytest.approx(1.2403e4, rel=1e-4)
    a = bandwidth_isotropic(MediumParams(0.5))
    b = bandwidth_isotropic(MediumParams(1.0))
    assert a == pytest.approx(4 * b, rel=1e-14)


def test_bandwidth_regions_examples(medium):
    iso = bandwidth_isotropic(medium)
    full = bandwidth_regions([Rect(0, math.pi / 2, 0, 2 * math.pi)], medium)
    assert full == pytest.approx(iso, rel=5e-3)
    cap = bandwidth_regions([Cap(0, 0, math.pi / 2)], medium)
    assert cap == pytest.approx(iso, rel=5e-3)
    quarter = bandwidth_regions([Rect(0, math.pi / 4, 0, 2 * math.pi)], medium)
    assert quarter == pytest.approx(iso / 2, rel=5e-3)


def test_region_union_counts_overlap_once(medium):
    a = Rect(0.2, 0.6, 0.0, 1.0)
    one = bandwidth_regions([a], medium)
    assert bandwidth_regions([a, a], medium) == pytest.approx(one, rel=1e-12)
    b = Rect(0.4, 0.9, 0.5, 2.0)
    u = bandwidth_regions([a, b], medium)
    assert max(one, bandwidth_regions([b], medium)) < u < one + bandwidth_regions([b], medium)
    assert u <= bandwidth_isotropic(medium)


def test_regions_errors(medium):
    with pytest.raises(DomainError):
        AngularRegionSet(())
    with pytest.raises(DomainError):
        Rect(0.5, 0.2, 0, 1)
    with pytest.raises(DomainError):
        Cap(2.0, 0, 0.1)


def test_dof():
    assert dof_segment(math.pi, 1.0) == pytest.approx(1.0)
    m = MediumParams(1.0)
    assert dof_segment(2 * m.kappa, 10 * m.wavelength) == pytest.approx(40.0)
    assert dof_segment(3.0, 4.0) == pytest.approx(2 * dof_segment(3.0, 2.0))
    assert dof_planar_loss_ratio() == pytest.approx(0.7853981633974483, rel=1e-15)
    assert dof_planar_loss_ratio(MediumParams.from_kappa(1.0)) == pytest.approx(
        dof_planar_loss_ratio(MediumParams.from_kappa(100.0)), rel=1e-14)
    assert dof_planar_loss_ratio() < 1


def test_evanescent_loss(medium):
    assert evanescent_power_loss(0.0, medium) == 1.0
    assert evanescent_power_loss_db(0.0, medium) == 0.0
    assert evanescent_power_loss(1.0, medium) == pytest.approx(3.487e-6, rel=1e-3)
    assert evanescent_power_loss_db(1.0, medium) == pytest.approx(-54.58, abs=5e-3)
    assert evanescent_power_loss_db(10.0, medium) == pytest.approx(-545.8, abs=0.1)
    d = np.linspace(0, 2, 9)
    assert np.allclose(evanescent_power_loss_db(d, medium), 10 * np.log10(evanescent_power_loss(d, medium)))
    with pytest.raises(DomainError):
        evanescent_power_loss(-1.0, medium)


def test_polar_grid_area_and_rim(medium):
    k = medium.kappa
    eps = 1e-6 * k
    g = build_disk_grid(medium, "polar", (64, 64), eps)
    assert g.weights.sum() == pytest.approx(math.pi * (k - eps) ** 2, rel=5e-3)
    g = build_disk_grid(medium, "polar", (16, 16), k / 20)
    gmin = math.sqrt(k**2 - (k - k / 20) ** 2)
    assert g.gamma.min() >= gmin
    assert np.all(g.weights > 0) and np.all(g.gamma > 0)


def test_cartesian_fill_factor(medium):
    g = build_disk_grid(medium, "cartesian", (129, 129))
    assert g.size == pytest.approx(math.pi / 4 * 129**2, rel=0.02)
    assert g.is_negation_closed()


def test_grid_errors(medium):
    with pytest.raises(ConfigError):
        build_disk_grid(medium, "polar", (3, 16))
    with pytest.raises(ConfigError):
        build_disk_grid(medium, "polar", (8, 8), rim_cut=medium.kappa / 5)
    with pytest.raises(ConfigError):
        build_disk_grid(medium, "polar", (8, 8), rim_cut=0.0)
    with pytest.raises(ConfigError):
        build_disk_grid(medium, "hexagonal", (8, 8))


def test_polar_grid_negation_closed_bitwise(medium):
    g = build_disk_grid(medium, "polar", (8, 12))
    perm = g.negation_permutation()
    assert perm is not None
    assert np.array_equal(g.kx[perm], -g.kx) and np.array_equal(g.ky[perm], -g.ky)
    assert not build_disk_grid(medium, "polar", (8, 7)).is_negation_closed()


def test_grid_json_roundtrip(medium):
    g = build_disk_grid(medium, "polar", (6, 8))
    h = DiskGrid.from_json(json.loads(json.dumps(g.to_json())))
    assert np.array_equal(h.kx, g.kx) and np.array_equal(h.weights, g.weights)
    assert h.descriptor() == g.descriptor()


def test_inverse_gamma_integral_exact_value():
    # 1/gamma integrates to 2 pi kappa over the disk: in polar form
    # int_0^kappa r / sqrt(kappa^2 - r^2) dr = kappa
    for kappa in (1.0, 2.0):
        m = MediumParams.from_kappa(kappa)
        g = build_disk_grid(m, "polar", (256, 64), rim_cut=1e-8 * kappa)
        assert disk_inverse_gamma_integral(g) == pytest.approx(2 * math.pi * kappa, rel=3e-3)


def test_inverse_gamma_integral_polar_is_rim_limited(medium):
    # the polar rule is exact up to the rim loss 2 pi gamma_min for any resolution
    k = medium.kappa
    eps = 1e-4 * k
    gmin = math.sqrt(k**2 - (k - eps) ** 2)
    for res in ((8, 8), (64, 16), (256, 64)):
        g = build_disk_grid(medium, "polar", res, eps)
        assert disk_inverse_gamma_integral(g) == pytest.approx(2 * math.pi * (k - gmin), rel=1e-12)


def test_inverse_gamma_integral_cartesian_converges(medium):
    k = medium.kappa
    errs = [abs(disk_inverse_gamma_integral(build_disk_grid(medium, "cartesian", (n, n)))
                - 2 * math.pi * k) for n in (16, 64, 256)]
    assert errs[0] > errs[1] > errs[2]


def test_line_grid(medium):
    k = medium.kappa
    g = build_line_grid(medium, "polar", 64)
    # int dkx / gamma over (-kappa, kappa) is pi
    assert np.sum(g.weights / g.gamma) == pytest.approx(math.pi, rel=1e-3)
    c = build_line_grid(medium, "cosine", 4096)
    assert np.sum(c.weights) == pytest.approx(2 * k, rel=1e-3)
    assert np.all(np.abs(g.kx) < k)
