"""Turn a scenario into realizations."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .synthesis import (ChannelRealization, choose_engine, config_hash, draw_angular_response,
                        generate, inject_evanescent_node, synthesize, synthesize_2d)
from .synthesis.batch import default_threads


def scenario_hash(scenario) -> str:
    return config_hash(scenario.data)


def engine_for(scenario, config=None) -> str:
    if scenario.model == "scalar2d":
        return "direct"
    if "inject_evanescent" in scenario.data:
        return "direct"
    config = scenario.config() if config is None else config
    return choose_engine(config, scenario["engine"])


def realize(scenario, threads: int | None = None, n: int | None = None):
    """Return ``(realizations, engine)`` for the scenario."""
    config = scenario.config()
    R = scenario.points("receive")
    S = scenario.points("source")
    n = scenario["n_realizations"] if n is None else n
    digest = scenario_hash(scenario)
    threads = default_threads() if threads is None else max(1, int(threads))
    engine = engine_for(scenario, config)

    if scenario.model == "scalar2d":
        one = lambda i: synthesize_2d(config, S, R, realization=i)
    elif "inject_evanescent" in scenario.data:
        fx = scenario["inject_evanescent"]
        kx = fx.get("kx", 2.0) * config.medium.kappa
        power = fx.get("power", 1.0)

        def one(i):
            resp = draw_angular_response(config, realization=i)
            resp = inject_evanescent_node(resp, kx, 0.0, power, seed=config.seed)
            return synthesize(resp, S, R)
    else:
        out = generate(config, S, R, n, engine=engine, threads=threads, tag=scenario.data)
        return out, engine

    if threads == 1:
        out = [one(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, range(n)))
    for r in out:
        object.__setattr__(r, "config_hash", digest)
        r.meta["engine"] = engine
    return out, engine


def manifest(scenario, engine: str, extra: dict | None = None) -> dict:
    gr, gs = scenario.grids()
    out = {
        "library": "emchannel",
        "version": __version__,
        "scenario": scenario["name"],
        "model": scenario.model,
        "seed": scenario.seed,
        "config_hash": scenario_hash(scenario),
        "engine": engine,
        "wavelength_m": scenario["wavelength_m"],
        "length_unit": "wavelength",
        "grids": {"receive": gr.descriptor(), "source": gs.descriptor()},
    }
    if extra:
        out.update(extra)
    return out
