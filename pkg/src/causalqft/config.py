"""JSON experiment configuration: schema, defaults and model construction."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from . import field_model
from .field_model import Model, OscillatorChainModel, RandomQuditModel
from .process_state import UNITARITY_TOL

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULT_CONFIG", "SCHEMA", "load_config"]


class ConfigError(ValueError):
    pass


_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_matrix = {"type": "array", "items": {"type": "array", "items": _complex}}


def _grid():
    props = {"start": {"type": "number"}, "stop": {"type": "number"},
             "points": {"type": "integer", "minimum": 1}}
    return {"type": "object", "additionalProperties": False, "properties": props}


SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"const": "chain"},
                        "sites": {"type": "integer", "minimum": 1},
                        "truncation": {"type": "integer", "minimum": 1},
                        "frequency": {"type": "number", "exclusiveMinimum": 0},
                        "coupling": {"type": "number", "minimum": 0},
                        "periodic": {"type": "boolean"},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "dimension"],
                    "properties": {
                        "kind": {"const": "random_qudit"},
                        "dimension": {"type": "integer", "minimum": 1},
                        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                        "sites": {"type": "integer", "minimum": 1},
                    },
                },
            ]
        },
        "times": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t_x": {"type": "number"}, "t_y": {"type": "number"}},
        },
        "sites": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"x": {"type": "integer", "minimum": 0},
                           "y": {"type": "integer", "minimum": 0}},
        },
        "branch": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["y_to_x", "x_to_y", "superposition"]},
                # ordered as [x_to_y, y_to_x]
                "weights": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2},
            },
        },
        "insertion": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"phi_x": {"enum": ["field", "identity"]},
                           "phi_y": {"enum": ["field", "identity"]}},
        },
        "unitaries": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"U": _matrix, "V": _matrix},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dt": _grid(), "theta": _grid()},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"cases": {"type": "integer", "minimum": 1},
                           "max_dim": {"type": "integer", "minimum": 1, "maximum": 8}},
        },
        "bench": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 1,
                                                   "maximum": field_model.MAX_PROCESS_DIM}},
                "repeats": {"type": "integer", "minimum": 1},
                "memory_budget_mb": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "strategy": {"enum": ["dense", "factored", "both"]},
        "output": {"type": ["string", "null"]},
    },
}

_CHAIN_DEFAULTS = {"sites": 1, "truncation": 4, "frequency": 1.0, "coupling": 0.0,
                   "periodic": False}

DEFAULT_CONFIG: dict[str, Any] = {
    "model": {"kind": "chain", **_CHAIN_DEFAULTS},
    "times": {"t_x": 1.0, "t_y": 0.0},
    "sites": {"x": 0, "y": 0},
    "branch": {"kind": "y_to_x"},
    "insertion": {"phi_x": "field", "phi_y": "field"},
    "unitaries": {},
    "sweep": {"dt": {"start": 0.0, "stop": 2 * math.pi, "points": 33},
              "theta": {"start": 0.0, "stop": math.pi / 2, "points": 9}},
    "verify": {"cases": 20, "max_dim": 6},
    "bench": {"dims": [2, 4, 6, 8], "repeats": 3, "memory_budget_mb": 2048},
    "seed": 0,
    "strategy": "both",
    "output": None,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if key == "model":
            out[key] = copy.deepcopy(val)
        elif isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _to_complex_matrix(rows) -> np.ndarray:
    m = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"unitary override must be a square matrix, got shape {m.shape}")
    return m


def grid(spec: dict) -> np.ndarray:
    n = spec["points"]
    if n == 1:
        return np.array([float(spec["start"])])
    step = (spec["stop"] - spec["start"]) / (n - 1)
    return spec["start"] + step * np.arange(n)


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def strategy(self) -> str:
        return self.raw["strategy"]

    @property
    def output(self) -> Optional[str]:
        return self.raw["output"]

    @property
    def t_x(self) -> float:
        return float(self.raw["times"]["t_x"])

    @property
    def t_y(self) -> float:
        return float(self.raw["times"]["t_y"])

    @property
    def site_x(self) -> int:
        return self.raw["sites"]["x"]

    @property
    def site_y(self) -> int:
        return self.raw["sites"]["y"]

    @property
    def branch_kind(self) -> str:
        return self.raw["branch"]["kind"]

    @property
    def weights(self) -> tuple[complex, complex]:
        w = self.raw["branch"].get("weights")
        if w is None:
            return (1 / math.sqrt(2), 1 / math.sqrt(2))
        return tuple(complex(re, im) for re, im in w)

    def model(self) -> Model:
        spec = dict(self.raw["model"])
        kind = spec.pop("kind")
        if kind == "chain":
            return OscillatorChainModel(**{**_CHAIN_DEFAULTS, **spec})
        spec.setdefault("seed", self.seed)
        return RandomQuditModel(**spec)

    def unitary(self, name: str) -> Optional[np.ndarray]:
        rows = self.raw["unitaries"].get(name)
        return None if rows is None else _to_complex_matrix(rows)

    def grid(self, name: str) -> np.ndarray:
        return grid(self.raw["sweep"][name])

    def digest(self) -> str:
        """SHA-256 of everything that affects results (the output path does not)."""
        content = {k: v for k, v in self.raw.items() if k != "output"}
        text = json.dumps(content, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return ExperimentConfig(_merge(self.raw, {k: v for k, v in kw.items() if v is not None}))


def _validate_semantics(cfg: ExperimentConfig) -> None:
    model = cfg.model()
    for site in (cfg.site_x, cfg.site_y):
        if site >= model.sites:
            raise ConfigError(f"site {site} out of range for a model with {model.sites} sites")
    if model.dim > field_model.MAX_PROCESS_DIM:
        raise ConfigError(
            f"model dimension {model.dim} exceeds {field_model.MAX_PROCESS_DIM} "
            "(six-register memory bound)"
        )
    for name in ("U", "V"):
        m = cfg.unitary(name)
        if m is None:
            continue
        if m.shape != (model.dim, model.dim):
            raise ConfigError(f"unitary {name} has shape {m.shape}, model dimension is {model.dim}")
        resid = float(np.max(np.abs(m.conj().T @ m - np.eye(model.dim))))
        if resid > UNITARITY_TOL:
            raise ConfigError(
                f"unitary {name} is not unitary: max |{name}†{name} - 1| = {resid:.3e}"
            )


def load_config(path: Optional[str | Path] = None, **overrides) -> ExperimentConfig:
    """Read, schema-check and default-fill a config; ``overrides`` win over the file."""
    user: dict = {}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    cfg = ExperimentConfig(_merge(DEFAULT_CONFIG, user)).with_overrides(**overrides)
    try:
        # checked after merging so command-line overrides obey the same rules
        jsonschema.validate(cfg.raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
    try:
        _validate_semantics(cfg)
    except field_model.ModelError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
