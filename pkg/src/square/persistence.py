"""JSON save/load for fitted SQUARE and baseline models.

Floats are written with ``repr`` precision by :mod:`json`, so a reloaded
model reproduces the original predictions exactly.
"""

from __future__ import annotations

import json

from .baselines import METHODS as BASELINE_METHODS, BaselineModel
from .core import AveragedModel
from .exceptions import DataError

__all__ = ["load_model", "model_from_dict", "model_to_dict", "save_model"]

FORMAT_VERSION = 1


def model_to_dict(model) -> dict:
    d = model.to_dict()
    d["format_version"] = FORMAT_VERSION
    return d


def model_from_dict(d: dict):
    """Rebuild a prediction-ready model, dispatching on its ``method`` tag."""
    if not isinstance(d, dict) or "method" not in d:
        raise DataError("model file lacks a 'method' tag")
    if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {d['format_version']}")
    try:
        if d["method"] == "SQUARE":
            return AveragedModel.from_dict(d)
        if d["method"] in BASELINE_METHODS:
            return BaselineModel.from_dict(d)
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed model file: {e!r}") from e
    raise DataError(f"unknown model method {d['method']!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not valid JSON ({e})") from e
    return model_from_dict(d)
