"""Experiment configuration: JSON validated against a fixed schema (unknown
keys are rejected)."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from .forcing import ForcingError, ForcingField

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "crystalflow experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "field"],
    "properties": {
        "kind": {"enum": ["single", "effective", "converge", "compare", "portrait"]},
        "field": {
            "type": "object", "additionalProperties": False,
            "required": ["alpha", "beta"],
            "properties": {"alpha": _NUM, "beta": _NUM, "epsilon": _POS},
        },
        "initial": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "rectangle": {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2},
                "vertices": {"type": "array", "minItems": 4,
                             "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
                "circle": _POS,
            },
            "minProperties": 1, "maxProperties": 1,
        },
        "T": _POS,
        "fraction_of_extinction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "samples": {"type": "integer", "minimum": 2},
        "branch_policy": {"enum": ["cross", "stay"]},
        "auto_snap": {"type": "boolean"},
        "eps_list": {"type": "array", "items": _POS, "minItems": 1},
        "bound": _POS,
        "pairs": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "grid": {
            "type": "object", "additionalProperties": False, "required": ["l1", "l2"],
            "properties": {"l1": {"type": "array", "items": _POS, "minItems": 1},
                           "l2": {"type": "array", "items": _POS, "minItems": 1}},
        },
        "output": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


def validate(cfg: Any) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}") from None
    eps = cfg.get("eps_list")
    if eps and any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_list must be strictly decreasing")
    fld = cfg["field"]
    for e in (eps or []) + ([fld["epsilon"]] if "epsilon" in fld else []):
        try:
            ForcingField(fld["alpha"], fld["beta"], e)
        except ForcingError as err:
            raise ConfigError(f"field: {err}") from None
    needs_eps = cfg["kind"] in ("single", "compare")
    if needs_eps and "epsilon" not in fld:
        raise ConfigError(f"field: epsilon is required for kind {cfg['kind']!r}")
    if cfg["kind"] in ("single", "effective", "converge") and "initial" not in cfg:
        raise ConfigError("initial shape is required")
    if cfg["kind"] == "converge" and not eps:
        raise ConfigError("eps_list is required for kind 'converge'")
    return cfg


def load(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return validate(cfg)
