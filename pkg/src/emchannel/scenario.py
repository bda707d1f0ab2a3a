"""Scenario files: JSON schema, presets and construction of model objects.

All lengths are in wavelengths. Internally the medium uses ``wavelength = 1``
and ``wavelength_m`` is only recorded for bookkeeping.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .angular import (Isotropic, Mixture, Piecewise, VmfComponent, VmfMixture, fig8b_preset,
                      fig8c_preset)
from .errors import ConfigError, DomainError
from .geometry import MediumParams
from .psd import Separable, isotropic_factor, normalize_factor
from .spectral_support import AngularRegionSet, Cap, Rect, build_disk_grid, build_line_grid
from .synthesis import (PlanarConfig, PlanarDensity, PlanarFactor, SynthesisConfig,
                        normalize_planar_factor)

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}

_component = {
    "type": "object",
    "properties": {
        "theta_mu_deg": {"type": "number", "minimum": 0, "maximum": 90},
        "phi_mu_deg": {"type": "number"},
        "alpha": {"type": "number", "minimum": 0},
        "circular_variance": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
    "required": ["theta_mu_deg", "phi_mu_deg"],
    "oneOf": [{"required": ["alpha"]}, {"required": ["circular_variance"]}],
    "additionalProperties": False,
}

_region = {
    "type": "object",
    "properties": {
        "rect_deg": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "cap_deg": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
    },
    "oneOf": [{"required": ["rect_deg"]}, {"required": ["cap_deg"]}],
    "additionalProperties": False,
}

_angular = {
    "type": "object",
    "properties": {
        "type": {"enum": ["isotropic", "vmf_mixture", "piecewise", "preset"]},
        "components": {"type": "array", "items": _component, "minItems": 1},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "regions": {"type": "array", "items": _region, "minItems": 1},
        "name": {"enum": ["isotropic", "fig8a", "fig8b", "fig8c"]},
    },
    "required": ["type"],
    "additionalProperties": False,
}

_lattice = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["line", "rectangle", "explicit"]},
        "n": {"type": "integer", "minimum": 1},
        "spacing": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                              {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                               "minItems": 2, "maxItems": 2}]},
        "shape": {"type": "array", "items": {"type": "integer", "minimum": 1},
                  "minItems": 2, "maxItems": 2},
        "origin": _point,
        "direction": _point,
        "points": {"type": "array", "items": _point, "minItems": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "wavelength_m": {"type": "number", "exclusiveMinimum": 0},
        "eta": {"type": "number", "exclusiveMinimum": 0},
        "model": {"enum": ["scalar3d", "complete3d", "scalar2d"]},
        "receive": _angular,
        "source": _angular,
        "planar_density": {
            "type": "object",
            "properties": {
                "type": {"enum": ["isotropic", "piecewise"]},
                "regions_deg": {"type": "array", "minItems": 1, "items": {
                    "type": "array", "minItems": 4, "maxItems": 4,
                    "items": {"type": "number", "minimum": 0, "maximum": 180}}},
            },
            "required": ["type"],
            "additionalProperties": False,
        },
        "spectral_factor": {
            "type": "object",
            "properties": {"form": {"enum": ["separable", "isotropic"]}},
            "required": ["form"],
            "additionalProperties": False,
        },
        "target_power": {"type": "number", "minimum": 0},
        "normalize": {"type": "boolean"},
        "block_gains": {"type": "array", "minItems": 2, "maxItems": 2,
                        "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                  "items": {"type": "number"}}},
        "grid": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["polar", "cartesian", "cosine"]},
                "resolution": {"type": "array", "items": {"type": "integer", "minimum": 4},
                               "minItems": 1, "maxItems": 2},
                "rim_cut": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.1},
            },
            "additionalProperties": False,
        },
        "points": {
            "type": "object",
            "properties": {"receive": _lattice, "source": _lattice},
            "required": ["receive", "source"],
            "additionalProperties": False,
        },
        "n_realizations": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "enforce_reciprocity": {"type": "boolean"},
        "engine": {"enum": ["auto", "direct", "kronecker"]},
        "acf": {
            "type": "object",
            "properties": {
                "side": {"enum": ["receive", "source"]},
                "lags": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "direction": _point,
            },
            "additionalProperties": False,
        },
        "angular_export": {
            "type": "object",
            "properties": {
                "side": {"enum": ["receive", "source"]},
                "resolution": {"type": "array", "items": {"type": "integer", "minimum": 2},
                               "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "checks": {"type": "array", "items": {"type": "string"}},
        "inject_evanescent": {
            "type": "object",
            "properties": {
                "kx": {"type": "number", "exclusiveMinimum": 1},
                "power": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["points"],
    "additionalProperties": False,
}

DEFAULTS = {
    "name": "scenario",
    "wavelength_m": 1.0,
    "eta": 1.0,
    "model": "scalar3d",
    "receive": {"type": "isotropic"},
    "source": {"type": "isotropic"},
    "spectral_factor": {"form": "separable"},
    "planar_density": {"type": "isotropic"},
    "target_power": 1.0,
    "normalize": True,
    "block_gains": [[0.25, 0.25], [0.25, 0.25]],
    "grid": {},
    "n_realizations": 100,
    "seed": 0,
    "enforce_reciprocity": False,
    "engine": "auto",
    "acf": {},
    "angular_export": {},
}

_ISO_POINTS = {
    "receive": {"kind": "line", "n": 13, "spacing": 0.125},
    "source": {"kind": "line", "n": 4, "spacing": 0.5},
}

PRESETS = {
    "isotropic": {"name": "isotropic", "points": _ISO_POINTS, "n_realizations": 2000,
                  "acf": {"lags": [0, 0.125, 0.25, 0.5, 0.75, 1.0, 1.5]}},
    "fig8a": {"name": "fig8a", "points": _ISO_POINTS, "n_realizations": 2000,
              "acf": {"lags": [0, 0.125, 0.25, 0.5, 0.75, 1.0, 1.5]}},
    "fig8b": {"name": "fig8b", "receive": {"type": "preset", "name": "fig8b"},
              "points": _ISO_POINTS, "n_realizations": 1000,
              "acf": {"lags": [0, 0.125, 0.25, 0.5, 1.0]}},
    "fig8c": {"name": "fig8c", "receive": {"type": "preset", "name": "fig8c"},
              "points": _ISO_POINTS, "n_realizations": 1000,
              "acf": {"lags": [0, 0.125, 0.25, 0.5, 1.0]}},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "points":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_raw(data) -> None:
    """Schema check; errors name the offending field path."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"scenario field {path}: {e.message}")


@dataclass
class Scenario:
    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def medium(self) -> MediumParams:
        return MediumParams(wavelength=1.0, eta=float(self.data["eta"]))

    @property
    def model(self) -> str:
        return self.data["model"]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)

    def is_isotropic(self, side: str = "receive") -> bool:
        if self.model == "scalar2d":
            return False
        if self.data["spectral_factor"]["form"] == "isotropic":
            return True
        spec = self.data[side]
        return spec["type"] == "isotropic" or (spec["type"] == "preset" and spec["name"] in ("isotropic", "fig8a"))

    def distribution(self, side: str):
        if self.data["spectral_factor"]["form"] == "isotropic":
            return Isotropic()
        return build_distribution(self.data[side])

    def points(self, side: str) -> np.ndarray:
        dim = 2 if self.model == "scalar2d" else 3
        return build_lattice(self.data["points"][side], dim)

    def grids(self):
        g = self.data["grid"]
        rim = g.get("rim_cut")
        m = self.medium
        rim_abs = None if rim is None else rim * m.kappa
        if self.model == "scalar2d":
            mode = g.get("mode", "polar")
            if mode not in ("polar", "cosine"):
                raise ConfigError("2D grids use mode 'polar' or 'cosine'")
            n = g.get("resolution", [256])[0]
            lg = build_line_grid(m, mode, n, rim_abs)
            return lg, lg
        mode = g.get("mode", "polar")
        if mode == "cosine":
            raise ConfigError("3D grids use mode 'polar' or 'cartesian'")
        res = g.get("resolution", [32, 32])
        if len(res) == 1:
            res = [res[0], res[0]]
        dg = build_disk_grid(m, mode, tuple(res), rim_abs)
        return dg, dg

    def config(self):
        """Synthesis configuration (3D) or planar configuration (2D)."""
        d = self.data
        m = self.medium
        gr, gs = self.grids()
        if self.model == "scalar2d":
            pd = d["planar_density"]
            if pd["type"] == "piecewise":
                if "regions_deg" not in pd:
                    raise ConfigError("scenario field planar_density: piecewise needs regions_deg")
                regs = tuple(((math.radians(a), math.radians(b)), (math.radians(c), math.radians(e)))
                             for a, b, c, e in pd["regions_deg"])
                dens = PlanarDensity("piecewise", regs)
            else:
                dens = PlanarDensity()
            f = PlanarFactor(dens, m, d["target_power"])
            if d["normalize"]:
                f = normalize_planar_factor(f, gr, gs, d["target_power"])
            return PlanarConfig(gr, gs, f, seed=self.seed)
        if d["spectral_factor"]["form"] == "isotropic":
            f = isotropic_factor(m, d["target_power"])
        else:
            f = Separable(self.distribution("receive"), self.distribution("source"), m,
                          d["target_power"])
        if d["normalize"]:
            f = normalize_factor(f, gr, gs, d["target_power"])
        return SynthesisConfig(gr, gs, f, seed=self.seed,
                               enforce_reciprocity=d["enforce_reciprocity"], model=self.model,
                               block_gains=tuple(tuple(r) for r in d["block_gains"]))


def build_distribution(spec: dict):
    kind = spec["type"]
    if kind == "isotropic":
        return Isotropic()
    if kind == "preset":
        if "name" not in spec:
            raise ConfigError("scenario field preset: missing name")
        return {"isotropic": Isotropic, "fig8a": Isotropic, "fig8b": fig8b_preset,
                "fig8c": fig8c_preset}[spec["name"]]()
    if kind == "vmf_mixture":
        if "components" not in spec:
            raise ConfigError("scenario field vmf_mixture: missing components")
        comps = [VmfComponent.from_angles(math.radians(c["theta_mu_deg"]), math.radians(c["phi_mu_deg"]),
                                          alpha=c.get("alpha"),
                                          circular_variance=c.get("circular_variance"))
                 for c in spec["components"]]
        w = spec.get("weights")
        mix = VmfMixture.equal(comps) if w is None else VmfMixture(tuple(comps), tuple(w))
        return Mixture(mix)
    if "regions" not in spec:
        raise ConfigError("scenario field piecewise: missing regions")
    regs = []
    for r in spec["regions"]:
        if "rect_deg" in r:
            regs.append(Rect(*(math.radians(v) for v in r["rect_deg"])))
        else:
            regs.append(Cap(*(math.radians(v) for v in r["cap_deg"])))
    return Piecewise(AngularRegionSet(tuple(regs)))


def build_lattice(spec: dict, dim: int = 3) -> np.ndarray:
    def vec(v):
        v = [float(x) for x in v]
        if len(v) == dim:
            return np.asarray(v)
        if dim == 3:
            return np.asarray(v + [0.0])
        if v[2] != 0.0:
            raise ConfigError("points of a 2D model must lie in the z = 0 plane")
        return np.asarray(v[:2])

    kind = spec["kind"]
    origin = vec(spec.get("origin", [0.0] * dim))
    if kind == "explicit":
        if "points" not in spec:
            raise ConfigError("scenario field points: explicit lattice needs points")
        pts = np.asarray([vec(p) for p in spec["points"]])
        return pts + origin
    if kind == "line":
        n = spec.get("n")
        sp = spec.get("spacing")
        if n is None or sp is None or not np.isscalar(sp):
            raise ConfigError("scenario field points: line needs n and a scalar spacing")
        u = vec(spec.get("direction", [1.0, 0.0, 0.0][:dim]))
        nu = np.linalg.norm(u)
        if nu == 0:
            raise ConfigError("line direction must be non-zero")
        return origin + np.arange(n)[:, None] * sp * (u / nu)[None, :]
    shape = spec.get("shape")
    sp = spec.get("spacing")
    if shape is None or sp is None:
        raise ConfigError("scenario field points: rectangle needs shape and spacing")
    dx, dy = (sp, sp) if np.isscalar(sp) else sp
    if dim == 2:
        raise ConfigError("rectangles are 3D lattices; use a line or explicit points in 2D")
    ix, iy = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    pts = np.stack([ix.ravel() * dx, iy.ravel() * dy, np.zeros(ix.size)], axis=-1)
    return pts + origin


def load_scenario(path=None, preset: str | None = None, seed: int | None = None,
                  overrides: dict | None = None) -> Scenario:
    """Read a scenario file and/or a preset, validate it and fill defaults."""
    if path is None and preset is None:
        raise ConfigError("give a scenario file or a preset")
    raw = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        raw = copy.deepcopy(PRESETS[preset])
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc}") from exc
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("scenario must be a JSON object")
        raw = _merge(raw, user)
    if overrides:
        raw = _merge(raw, overrides)
    if seed is not None:
        raw["seed"] = int(seed)
    validate_raw(raw)
    data = _merge(DEFAULTS, raw)
    validate_raw(data)
    sc = Scenario(data)
    try:
        if sc.model == "scalar2d" and any(sc["points"][s]["kind"] == "rectangle" for s in ("receive", "source")):
            raise ConfigError("rectangles are 3D lattices")
        sc.points("receive"), sc.points("source")
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return sc
