"""Registry of named checks run by ``emchannel validate``.

Each check returns a report ``{test, statistic, threshold, pass, n, seed}``
or a skip record ``{test, skipped: reason}``.
"""
from __future__ import annotations

import math

import numpy as np

from .angular import Discrete, check_normalization
from .errors import ConfigError
from .spectral_support import build_disk_grid, evanescent_power_loss_db
from .synthesis import (SynthesisConfig, synthesize_complete, synthesize_realization)
from . import validation as V


class Context:
    """Lazily generated realizations shared between checks."""

    def __init__(self, scenario, threads=None):
        self.scenario = scenario
        self.threads = threads
        self._real = None
        self.engine = None

    @property
    def realizations(self):
        if self._real is None:
            from .runner import realize
            self._real, self.engine = realize(self.scenario, self.threads)
        return self._real


def _report(ctx, test, stat, thr, ok, n, **extra):
    out = {"test": test, "statistic": float(stat), "threshold": float(thr), "pass": bool(ok),
           "n": int(n), "seed": ctx.scenario.seed}
    out.update(extra)
    return out


def _skip(test, reason):
    return {"test": test, "skipped": reason, "pass": True}


def _acf_direction(sc):
    d = sc["acf"].get("direction")
    if d is None:
        spec = sc["points"]["receive"]
        d = spec.get("direction", [1.0, 0.0, 0.0]) if spec["kind"] == "line" else [1.0, 0.0, 0.0]
    d = np.asarray(d, float)
    dim = 2 if sc.model == "scalar2d" else 3
    d = np.pad(d, (0, max(0, dim - d.size)))[:dim]
    return d / np.linalg.norm(d)


def scenario_acf(ctx, lags=None):
    """Empirical ACF of the scenario at the configured lags (in wavelengths)."""
    sc = ctx.scenario
    side = sc["acf"].get("side", "receive")
    lags = sc["acf"].get("lags", [0.0, 0.125, 0.25, 0.5, 1.0]) if lags is None else lags
    missing = sorted(set(lags) - set(_available_lags(ctx, lags)))
    if missing:
        raise ConfigError(f"scenario field acf/lags: no {side} point pairs at lags {missing}")
    u = _acf_direction(sc)
    vecs = [l * u for l in lags]
    return list(lags), V.empirical_acf(ctx.realizations, vecs, side=side, tol=1e-6)


def _available_lags(ctx, lags):
    sc = ctx.scenario
    side = sc["acf"].get("side", "receive")
    pts = sc.points(side)
    u = _acf_direction(sc)
    return [l for l in lags if V._pairs(pts, l * u, 1e-6)[0].size > 0]


def check_power(ctx):
    sc = ctx.scenario
    h = np.stack([r.h for r in ctx.realizations])
    target = sc["target_power"]
    if sc.model == "complete3d":
        target *= float(np.sum(sc["block_gains"]))
    emp = float(np.mean(np.abs(h) ** 2))
    dev = abs(emp - target) / target if target > 0 else abs(emp)
    return _report(ctx, "power", dev, 0.05, dev <= 0.05, len(h), empirical=emp, target=target)


def check_clarke(ctx):
    sc = ctx.scenario
    if sc.model != "scalar3d" or not sc.is_isotropic(sc["acf"].get("side", "receive")):
        return _skip("clarke", "needs an isotropic scalar 3D scenario")
    lags = _available_lags(ctx, sc["acf"].get("lags", [0.0, 0.125, 0.25, 0.5, 0.75, 1.0, 1.5]))
    if len(lags) < 2:
        return _skip("clarke", "point lattice does not contain the requested lags")
    lags, est = scenario_acf(ctx, lags)
    dev = float(np.max(np.abs(est.values - V.clarke_acf(np.array(lags), sc.medium))))
    return _report(ctx, "clarke", dev, 0.03, dev <= 0.03, est.n_realizations, lags=lags)


def check_decorrelation(ctx):
    sc = ctx.scenario
    if sc.model != "scalar3d" or not sc.is_isotropic(sc["acf"].get("side", "receive")):
        return _skip("decorrelation", "needs an isotropic scalar 3D scenario")
    lags = _available_lags(ctx, [0.5, 1.0, 1.5])
    if not lags:
        return _skip("decorrelation", "no half-wavelength lags in the point lattice")
    lags, est = scenario_acf(ctx, lags)
    stat = float(np.max(np.abs(est.values)))
    return _report(ctx, "decorrelation", stat, 0.03, stat <= 0.03, est.n_realizations, lags=lags)


def check_stationarity(ctx):
    sc = ctx.scenario
    R = sc.points("receive")
    s0 = sc.points("source")[0]
    if R.shape[0] < 2:
        return _skip("stationarity", "needs at least two receive points")
    if len(ctx.realizations) < 100:
        return _skip("stationarity", "needs at least 100 realizations")
    pairs = [(r, s0, r, s0) for r in R]
    rep = V.stationarity_test(ctx.realizations, pairs)
    return _report(ctx, "stationarity", rep["statistic"], rep["threshold"], rep["pass"], rep["n"])


def check_gaussianity(ctx):
    if len(ctx.realizations) < 500:
        return _skip("gaussianity", "needs at least 500 realizations")
    x = np.array([r.h[0, 0] for r in ctx.realizations])
    # the pseudo-covariance ratio has standard error ~ 1/sqrt(n); below
    # n = 3600 a fixed 0.05 threshold rejects Gaussian data by chance
    rep = V.gaussianity_test(x, pseudo_threshold=max(0.05, 3.0 / math.sqrt(x.size)))
    return _report(ctx, "gaussianity", rep["statistic"], rep["threshold"], rep["pass"], rep["n"],
                   pseudo_covariance=rep["pseudo_covariance"],
                   pseudo_threshold=rep["pseudo_threshold"])


def check_reciprocity(ctx):
    sc = ctx.scenario
    if sc.model != "scalar3d":
        return _skip("reciprocity", "scalar 3D model only")
    cfg = sc.config()
    P = sc.points("receive")
    if np.ptp(P[:, 2]) > 0:
        return _skip("reciprocity", "receive points must share one z plane")
    try:
        rc = SynthesisConfig(cfg.grid_receive, cfg.grid_source, cfg.factor, seed=cfg.seed,
                             enforce_reciprocity=True)
        h = synthesize_realization(rc, P, P).h
    except ConfigError as exc:
        return _skip("reciprocity", str(exc))
    stat = float(np.max(np.abs(h - h.T)))
    return _report(ctx, "reciprocity", stat, 1e-10, stat <= 1e-10, 1)


def check_complete_reduction(ctx):
    sc = ctx.scenario
    if sc.model == "scalar2d":
        return _skip("complete_reduction", "3D models only")
    cfg = sc.config()
    R, S = sc.points("receive"), sc.points("source")
    scalar = SynthesisConfig(cfg.grid_receive, cfg.grid_source, cfg.factor, seed=cfg.seed)
    comp = SynthesisConfig(cfg.grid_receive, cfg.grid_source, cfg.factor, seed=cfg.seed,
                           model="complete3d", block_gains=((1.0, 0.0), (0.0, 0.0)))
    a = synthesize_realization(scalar, S, R).h
    b = synthesize_complete(comp, S, R).h
    same = bool(np.array_equal(a, b))
    return _report(ctx, "complete_reduction", 0.0 if same else float(np.max(np.abs(a - b))), 0.0, same, 1)


def check_weyl(ctx):
    m = ctx.scenario.medium
    z = [1.0, 2.0, 5.0]
    e3 = max(V.weyl_check(z, m), V.weyl_check(z, m, xy=(0.4, -0.3)))
    e2 = max(V.weyl_check_2d(z, m), V.weyl_check_2d(z, m, x=0.7))
    stat = max(e3, e2)
    return _report(ctx, "weyl", stat, 1e-3, stat <= 1e-3, 12, err3d=e3, err2d=e2)


def check_disk_integral(ctx):
    m = ctx.scenario.medium
    g = build_disk_grid(m, "polar", (256, 64), rim_cut=1e-8 * m.kappa)
    err = V.disk_integral_check(g)
    return _report(ctx, "disk_integral", err, 3e-3, err <= 3e-3, g.size)


def check_normalization_suite(ctx):
    sc = ctx.scenario
    if sc.model == "scalar2d":
        return _skip("normalization", "3D angular densities only")
    res = []
    for side in ("receive", "source"):
        d = sc.distribution(side)
        if isinstance(d, Discrete):
            continue
        res.append(check_normalization(d))
    stat = max(res)
    return _report(ctx, "normalization", stat, 1e-6, stat <= 1e-6, len(res))


def check_evanescent_loss(ctx):
    m = ctx.scenario.medium
    v = float(evanescent_power_loss_db(10.0 * m.wavelength, m))
    dev = abs(v + 545.8)
    return _report(ctx, "evanescent_loss", dev, 0.1, dev <= 0.1, 1, value_db=v)


def check_far_field(ctx):
    m = ctx.scenario.medium
    e = V.far_field_error_curve([100.0 * m.wavelength], [m.wavelength, 0.0, 0.0], m)[0]
    return _report(ctx, "far_field", e, 0.05, e <= 0.05, 1)


REGISTRY = {
    "power": check_power,
    "clarke": check_clarke,
    "decorrelation": check_decorrelation,
    "stationarity": check_stationarity,
    "gaussianity": check_gaussianity,
    "reciprocity": check_reciprocity,
    "complete_reduction": check_complete_reduction,
    "weyl": check_weyl,
    "disk_integral": check_disk_integral,
    "normalization": check_normalization_suite,
    "evanescent_loss": check_evanescent_loss,
    "far_field": check_far_field,
}


def run_checks(scenario, only=None, threads=None):
    names = list(scenario.data.get("checks") or REGISTRY)
    if only:
        names = [only] if isinstance(only, str) else list(only)
    unknown = [n for n in names if n not in REGISTRY]
    if unknown:
        raise ConfigError(f"unknown check(s) {unknown}; choose from {sorted(REGISTRY)}")
    ctx = Context(scenario, threads)
    return [REGISTRY[n](ctx) for n in names], ctx
