"""Command-line front end: ``emchannel {synthesize,acf,validate,angular}``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 resource guard.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import ConfigError, DomainError, ResourceLimitError
from .scenario import load_scenario

log = logging.getLogger("emchannel")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args):
    over = {}
    if getattr(args, "realizations", None) is not None:
        over["n_realizations"] = args.realizations
    return load_scenario(args.scenario, args.preset, args.seed, over or None)


def cmd_synthesize(args) -> int:
    from .runner import manifest, realize

    sc = _scenario(args)
    reals, engine = realize(sc, args.threads)
    out = _outdir(args)
    man = manifest(sc, engine, {"n_realizations": len(reals),
                                "receivers": sc.points("receive"), "sources": sc.points("source")})
    p = io.write_realizations_csv(out / "realizations.csv", reals)
    io.write_sidecar(p, dict(man, columns=["realization", "r_index", "s_index", "re", "im"]))
    p, layout = io.write_blob(out / "realizations.c64", reals)
    io.write_sidecar(p, dict(man, **layout))
    io.write_json(out / "scenario.json", sc.data)
    print(f"wrote {len(reals)} realizations to {out}")
    return EXIT_OK


def cmd_acf(args) -> int:
    from .checks import Context, scenario_acf
    from .runner import manifest
    from .validation import clarke_acf

    sc = _scenario(args)
    ctx = Context(sc, args.threads)
    lags, est = scenario_acf(ctx)
    side = sc["acf"].get("side", "receive")
    out = _outdir(args)
    man = manifest(sc, ctx.engine, {"n_realizations": est.n_realizations, "side": side})
    payload = dict(est.to_dict(), lags_lambda=lags, side=side)
    header = ["lag_lambda", "correlation"]
    cols = [lags, np.real(est.values)]
    if sc.is_isotropic(side):
        ref = np.atleast_1d(clarke_acf(np.array(lags), sc.medium))
        dev = float(np.max(np.abs(est.values - ref)))
        payload.update(clarke=ref.tolist(), max_abs_dev_clarke=dev)
        header.append("clarke")
        cols.append(ref)
        print(f"max |empirical - sinc| = {dev:.4f}")
    p = io.write_json(out / "acf.json", payload)
    io.write_sidecar(p, man)
    p = io.write_table(out / "acf.csv", header, zip(*cols))
    io.write_sidecar(p, man)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .checks import run_checks
    from .runner import manifest

    sc = _scenario(args)
    reports, ctx = run_checks(sc, args.only, args.threads)
    out = _outdir(args)
    p = io.write_json(out / "validate.json", reports)
    io.write_sidecar(p, manifest(sc, ctx.engine or "none"))
    ok = all(r["pass"] for r in reports)
    for r in reports:
        if "skipped" in r:
            print(f"SKIP {r['test']}: {r['skipped']}")
        else:
            print(f"{'PASS' if r['pass'] else 'FAIL'} {r['test']}: "
                  f"statistic={r['statistic']:.4g} threshold={r['threshold']:.4g}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_angular(args) -> int:
    from .runner import manifest

    sc = _scenario(args)
    if sc.model == "scalar2d":
        raise ConfigError("angular export covers 3D angular densities")
    exp = sc["angular_export"]
    side = exp.get("side", "receive")
    nt, nphi = exp.get("resolution", [90, 180])
    dist = sc.distribution(side)
    th = (np.arange(nt) + 0.5) * (0.5 * math.pi / nt)
    ph = (np.arange(nphi) + 0.5) * (2 * math.pi / nphi)
    T, P = np.meshgrid(th, ph, indexing="ij")
    val = np.asarray(dist.pdf_angles(T, P)) * np.sin(T)
    out = _outdir(args)
    rows = zip(np.degrees(T).ravel(), np.degrees(P).ravel(), val.ravel())
    p = io.write_table(out / "angular.csv", ["theta_deg", "phi_deg", "p_sin_theta"], rows)
    io.write_sidecar(p, manifest(sc, "none", {"side": side, "resolution": [nt, nphi]}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emchannel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in (("synthesize", cmd_synthesize, "draw channel realizations"),
                              ("acf", cmd_acf, "estimate the spatial autocorrelation"),
                              ("validate", cmd_validate, "run the validation checks"),
                              ("angular", cmd_angular, "export p(theta, phi) sin(theta)")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--scenario", help="scenario JSON file")
        p.add_argument("--preset", help="isotropic, fig8a, fig8b or fig8c")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
        p.add_argument("--realizations", type=int, help="override n_realizations")
        if name == "validate":
            p.add_argument("--only", help="run a single named check")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.seed is not None and not (0 <= args.seed < 2**64):
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
