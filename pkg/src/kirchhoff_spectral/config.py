"""JSON run descriptions: validation with defaults, then the objects they describe."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .dynamics import Nonlinearity
from .errors import ConfigError
from .modulus import ContinuityModulus
from .spaces import WeightFunction
from .spectrum import Spectrum, StatePair

__all__ = ["SCHEMA", "RunConfig", "load_config", "resolve_config", "build"]

_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["spectrum", "nonlinearity"],
    "properties": {
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "required": ["preset"],
            "properties": {
                "preset": {"enum": ["interval-laplacian", "geometric", "custom"]},
                "K": {"type": "integer", "minimum": 1},
                "q": {"type": "number", "exclusiveMinimum": 1},
                "lambdas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            },
        },
        "data": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["u0", "u1"],
                    "properties": {
                        "u0": {"type": "array", "items": {"type": "number"}},
                        "u1": {"type": "array", "items": {"type": "number"}},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["generator"],
                    "properties": {
                        "generator": {"const": "exp-power"},
                        "p": _POS,
                        "a0": {"type": "number"},
                        "a1": {"type": "number"},
                    },
                },
            ]
        },
        "nonlinearity": {
            "type": "object",
            "additionalProperties": False,
            "required": ["preset"],
            "properties": {
                "preset": {"enum": ["linear", "kirchhoff", "degenerate", "hoelder-degenerate"]},
                "a": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
        },
        "omega": {"type": "string"},
        "phi": {"type": "string"},
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "T": _POS,
                "tol": _POS,
                "beta": {"type": "number", "minimum": 0},
                "rho_seed": _POS,
                "n_max": {"type": ["integer", "null"], "minimum": 2},
                "grid_step": _POS,
                "parity": {"enum": ["odd", "even"]},
                "case": {"enum": ["auto", "strict", "weak"]},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string", "minLength": 1},
                "modes": {"type": "boolean"},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else ""


def _schema_problems(doc) -> list:
    problems = []
    for err in sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))):
        if err.validator == "oneOf" and err.context:
            # report the branch whose errors sit deepest, usually the intended one
            best = max(err.context, key=lambda e: len(e.absolute_path))
            problems.append((_pointer(best.absolute_path), best.message))
        else:
            problems.append((_pointer(err.absolute_path), err.message))
    return problems


def resolve_config(doc: dict) -> dict:
    """Validate ``doc`` and return a copy with every default filled in."""
    problems = _schema_problems(doc)
    if problems:
        raise ConfigError(problems)
    cfg = copy.deepcopy(doc)
    sp = cfg["spectrum"]
    if sp["preset"] == "custom":
        if "lambdas" not in sp:
            raise ConfigError([("/spectrum/lambdas", "custom spectrum needs 'lambdas'")])
        sp["K"] = len(sp["lambdas"])
    else:
        sp.setdefault("K", 16)
        if sp["preset"] == "geometric":
            sp.setdefault("q", 2.0)
    nl = cfg["nonlinearity"]
    if nl["preset"] == "hoelder-degenerate" and "a" not in nl:
        raise ConfigError([("/nonlinearity/a", "hoelder-degenerate needs the exponent 'a'")])
    cfg.setdefault("data", {"generator": "exp-power"})
    data = cfg["data"]
    if "generator" in data:
        data.setdefault("p", 1.5)
        data.setdefault("a0", 1.0)
        data.setdefault("a1", 1.0)
    else:
        for key in ("u0", "u1"):
            if len(data[key]) != sp["K"]:
                raise ConfigError([(f"/data/{key}", f"has {len(data[key])} entries, spectrum has K={sp['K']}")])
    nonlin = _nonlinearity(nl)
    cfg.setdefault("omega", nonlin.omega.label if nonlin.omega is not None else "lipschitz")
    cfg.setdefault("phi", "affine")
    run = cfg.setdefault("run", {})
    run.setdefault("case", "auto")
    strict = run["case"] == "strict" or (run["case"] == "auto" and nonlin.nu > 0)
    run.setdefault("T", 5.0)
    run.setdefault("tol", 1e-9)
    run.setdefault("beta", 2.0 if strict else 3.0)
    run.setdefault("rho_seed", 1.0)
    run.setdefault("n_max", None)
    run.setdefault("grid_step", 1.0)
    run.setdefault("parity", "odd")
    out = cfg.setdefault("output", {})
    out.setdefault("dir", "out")
    out.setdefault("modes", False)
    # parse-level checks of the string fields
    for ptr, fn in (("/omega", ContinuityModulus.parse), ("/phi", WeightFunction.parse)):
        try:
            fn(cfg[ptr[1:]])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError([(ptr, str(exc))]) from None
    try:
        _spectrum(sp)
    except ValueError as exc:
        raise ConfigError([("/spectrum", str(exc))]) from None
    return cfg


def load_config(path) -> dict:
    """Read, validate and default-fill a JSON run description."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError([("", f"config file {str(p)!r} not found")]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"not valid JSON: {exc}")]) from None
    if not isinstance(doc, dict):
        raise ConfigError([("", "top level must be an object")])
    return resolve_config(doc)


def _spectrum(sp: dict) -> Spectrum:
    if sp["preset"] == "interval-laplacian":
        return Spectrum.interval_laplacian(sp["K"])
    if sp["preset"] == "geometric":
        return Spectrum.geometric(sp["K"], sp["q"])
    return Spectrum.custom(sp["lambdas"])


def _nonlinearity(nl: dict) -> Nonlinearity:
    return Nonlinearity.preset(nl["preset"], nl.get("a"))


def _data(spec: Spectrum, data: dict) -> StatePair:
    if "generator" in data:
        base = np.exp(-np.power(spec.lambdas, float(data["p"])))
        return StatePair(spec, float(data["a0"]) * base, float(data["a1"]) * base)
    return StatePair(spec, data["u0"], data["u1"])


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Objects built from a resolved configuration."""

    resolved: dict
    spectrum: Spectrum
    pair: StatePair
    nonlinearity: Nonlinearity
    omega: ContinuityModulus
    phi: WeightFunction

    @property
    def run(self) -> dict:
        return self.resolved["run"]

    @property
    def strict(self) -> bool:
        case = self.run["case"]
        return case == "strict" or (case == "auto" and self.nonlinearity.nu > 0)


def build(cfg: dict) -> RunConfig:
    spec = _spectrum(cfg["spectrum"])
    return RunConfig(cfg, spec, _data(spec, cfg["data"]), _nonlinearity(cfg["nonlinearity"]),
                     ContinuityModulus.parse(cfg["omega"]), WeightFunction.parse(cfg["phi"]))
