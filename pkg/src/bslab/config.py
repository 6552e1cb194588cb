"""Experiment configuration: JSON schema, semantic checks and typed accessors."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import twobody
from .bounds import PROFILE_KINDS, RadialProfile
from .errors import InputError
from .model import SHAPES, PairPotential, reduced_masses
from .threebody import BasisRecipe

EXPERIMENTS = (
    "twobody-threshold",
    "mu-curve",
    "wk-decomp",
    "lemma3",
    "green-bound",
    "zabyv",
    "threebody-scan",
    "spreading",
)

# blocks each experiment reads
REQUIRES = {
    "twobody-threshold": ("potentials", "twobody"),
    "mu-curve": ("potentials", "twobody"),
    "wk-decomp": ("potentials", "twobody"),
    "lemma3": ("bounds",),
    "green-bound": ("bounds",),
    "zabyv": ("bounds",),
    "threebody-scan": ("masses", "potentials", "threebody"),
    "spreading": ("masses", "potentials", "threebody"),
}

_pos = {"type": "number", "exclusiveMinimum": 0}
_pos_list = {"type": "array", "items": _pos, "minItems": 1}
_span = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start", "stop", "num"],
    "properties": {
        "start": {"type": "number", "minimum": 0},
        "stop": {"type": "number", "minimum": 0},
        "num": {"type": "integer", "minimum": 1, "maximum": 10000},
        "log": {"type": "boolean"},
        "relative": {"type": "boolean"},
    },
}
_samples = {"oneOf": [_pos_list, _span]}

_potential = {
    "type": "object",
    "additionalProperties": False,
    "required": ["shape", "depth"],
    "properties": {
        "shape": {"enum": list(SHAPES)},
        "depth": {"type": "number", "minimum": 0},
        "range": _pos,
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiments": {"type": "array", "items": {"enum": list(EXPERIMENTS)}},
        "masses": {"type": "array", "items": _pos, "minItems": 3, "maxItems": 3},
        "potentials": {
            "type": "object",
            "additionalProperties": False,
            "required": ["12"],
            "properties": {"12": _potential, "13": _potential, "23": _potential},
        },
        "twobody": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pair": {"enum": ["12", "13", "23"]},
                "grid_n": {"type": "integer", "minimum": 8, "maximum": 4000},
                "r_max": _pos,
                "k_samples": _samples,
                "fit_window": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                "threshold_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2},
                "excess": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 10}},
                "oracle": {"type": "boolean"},
            },
        },
        "threebody": {
            "type": "object",
            "additionalProperties": False,
            "required": ["theta_grid"],
            "properties": {
                "theta_grid": _samples,
                "lambda": {"oneOf": [{"type": "number", "minimum": 0}, {"const": "epsilon"}]},
                "basis": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "pair_min": _pos, "pair_max": _pos,
                        "pair_count": {"type": "integer", "minimum": 1, "maximum": 60},
                        "spectator_min": _pos, "spectator_max": _pos,
                        "spectator_count": {"type": "integer", "minimum": 1, "maximum": 60},
                        "max_ratio": {"oneOf": [_pos, {"type": "null"}]},
                    },
                },
                "radii": _pos_list,
                "tol_bind": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-1},
                "epsilon_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "check_doubling": {"type": "boolean"},
            },
        },
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "profile": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": list(PROFILE_KINDS)},
                        "amplitude": _pos,
                        "width": _pos,
                    },
                },
                "eps0": _pos,
                "z_samples": _samples,
                "xi_samples": _samples,
                "zabyv": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "R0": _pos_list,
                        "delta": _pos_list,
                        "samples": {"type": "integer", "minimum": 1, "maximum": 10_000_000},
                    },
                },
            },
        },
        "output": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    },
}


@dataclass
class Report:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors

    def lines(self):
        return [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]


def load(path):
    """Read a JSON config; unreadable files raise OSError, malformed JSON InputError."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc


def config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _where(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def expand(spec, scale=1.0):
    """Sample list from an explicit array or a {start, stop, num[, log, relative]} span."""
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    f = scale if spec.get("relative") else 1.0
    lo, hi, n = spec["start"] * f, spec["stop"] * f, spec["num"]
    return np.geomspace(lo, hi, n) if spec.get("log") else np.linspace(lo, hi, n)


def theta_critical_estimate(cfg):
    """Tabulated Theta_cr from the (1, 3) potential and the masses; no solve."""
    masses = build_masses(cfg)
    p = build_potential(cfg, "13").with_coupling(1.0).scaled(masses.pair_alpha(1, 3))
    return twobody.threshold_estimate(p)


def validate(cfg, experiments=None):
    """All schema and semantic violations of ``cfg``; never computes anything heavy."""
    rep = Report()
    validator = jsonschema.Draft202012Validator(SCHEMA)
    for err in sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path))):
        rep.errors.append(f"{_where(err)}: {err.message}")
    if rep.errors or not isinstance(cfg, dict):
        return rep
    wanted = list(experiments or cfg.get("experiments", []))
    for name in wanted:
        for block in REQUIRES[name]:
            if block not in cfg:
                rep.errors.append(f"experiment {name!r} needs the {block!r} block")
        if name in ("threebody-scan", "spreading") and "potentials" in cfg:
            missing = [k for k in ("13", "23") if k not in cfg["potentials"]]
            if missing:
                rep.errors.append(f"experiment {name!r} needs potentials {missing}")
    tb = cfg.get("twobody", {})
    if "fit_window" in tb and not tb["fit_window"][0] < tb["fit_window"][1]:
        rep.errors.append("twobody/fit_window: lower edge must be below upper edge")
    pots = cfg.get("potentials", {})
    pair = tb.get("pair", "12")
    if "twobody" in cfg and pair not in pots:
        rep.errors.append(f"twobody/pair: no potential given for pair {pair}")
    for key, p in pots.items():
        if p.get("depth", 1.0) == 0:
            rep.errors.append(f"potentials/{key}: depth must be positive")
    for path, spec in (("threebody/theta_grid", cfg.get("threebody", {}).get("theta_grid")),
                       ("twobody/k_samples", tb.get("k_samples")),
                       ("bounds/z_samples", cfg.get("bounds", {}).get("z_samples")),
                       ("bounds/xi_samples", cfg.get("bounds", {}).get("xi_samples"))):
        if isinstance(spec, dict):
            if spec.get("log") and spec["start"] <= 0:
                rep.errors.append(f"{path}: log spacing needs start > 0")
            if spec["num"] > 1 and not spec["start"] < spec["stop"] and path.startswith("threebody"):
                rep.errors.append(f"{path}: start must be below stop")
    if rep.errors:
        return rep
    if "threebody" in cfg and {"masses", "potentials"} <= cfg.keys() and "13" in pots:
        theta_cr = theta_critical_estimate(cfg)
        grid = expand(cfg["threebody"]["theta_grid"], theta_cr)
        if np.any(np.diff(grid) <= 0):
            rep.errors.append("threebody/theta_grid: values must be strictly increasing")
        if grid.min() < 0 or grid.max() > 1.5 * theta_cr:
            rep.warnings.append(
                f"threebody/theta_grid spans [{grid.min():.4g}, {grid.max():.4g}], "
                f"outside [0, 1.5 Theta_cr] = [0, {1.5 * theta_cr:.4g}]"
            )
    return rep


# --- typed accessors -------------------------------------------------------------------

def build_masses(cfg):
    return reduced_masses(*cfg.get("masses", (1.0, 1.0, 1.0)))


def build_potential(cfg, key):
    d = cfg["potentials"][key]
    return PairPotential(d["shape"], float(d["depth"]), float(d.get("range", 1.0)))


def build_potentials(cfg):
    return {(int(k[0]), int(k[1])): build_potential(cfg, k) for k in cfg["potentials"]}


def build_recipe(cfg):
    return BasisRecipe(**cfg.get("threebody", {}).get("basis", {}))


def build_profile(cfg):
    d = cfg.get("bounds", {}).get("profile", {"kind": "gaussian"})
    return RadialProfile(d["kind"], float(d.get("amplitude", 1.0)), float(d.get("width", 1.0)))


def require(cfg, experiment):
    """Raise InputError listing every violation relevant to ``experiment``."""
    rep = validate(cfg, [experiment])
    if not rep.ok:
        raise InputError("invalid config:\n  " + "\n  ".join(rep.errors))
    return rep
