"""JSON persistence for trained models."""
from __future__ import annotations

import json

from ..errors import SchemaError
from .gpr import GprRegressor
from .mlp import Mlp
from .surrogate import _NormalizedSurrogate

_KINDS = {"mlp": Mlp, "gpr": GprRegressor, "surrogate": _NormalizedSurrogate}


def model_to_dict(model) -> dict:
    return model.to_dict()


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind not in _KINDS:
        raise SchemaError(f"unknown model kind {kind!r}")
    return _KINDS[kind].from_dict(d)


def save_model(model, path) -> None:
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, sort_keys=True)


def load_model(path):
    with open(path) as f:
        return model_from_dict(json.load(f))
