"""JSON model configs and CSV data files."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .core import DiagGaussian, Model, ModelSpec, StandardGaussian, validate_model
from .layers import Abs, DiagScale, Linear, Slice

_NUM_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}

MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["input_dim", "input_domain", "prior", "layers", "terminal"],
    "properties": {
        "input_dim": {"type": "integer", "minimum": 1},
        "input_domain": {"enum": ["reals", "unit_box", "nonnegative"]},
        "prior": {"enum": ["std_gaussian", "uniform01", "exponential1"]},
        "layers": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type", "keep"],
                        "properties": {"type": {"const": "slice"}, "keep": {"type": "integer", "minimum": 1}},
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type"],
                        "properties": {"type": {"const": "abs"}},
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type", "weights"],
                        "properties": {
                            "type": {"const": "linear"},
                            "weights": {"type": "array", "items": _NUM_VEC, "minItems": 1},
                            "prior": {"enum": ["uniform01", "exponential1"]},
                            "trainable": {"type": "boolean"},
                        },
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["type", "scales"],
                        "properties": {"type": {"const": "diag_scale"}, "scales": _NUM_VEC},
                    },
                ]
            },
        },
        "terminal": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {"type": {"const": "std_gaussian"}, "dim": {"type": "integer", "minimum": 1}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "mean", "var"],
                    "properties": {
                        "type": {"const": "diag_gaussian"},
                        "mean": _NUM_VEC,
                        "var": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                    },
                },
            ]
        },
    },
}


class ConfigError(ValueError):
    pass


def _layer_from_json(d: dict, model_prior: str):
    kind = d["type"]
    if kind == "slice":
        return Slice(d["keep"])
    if kind == "abs":
        return Abs()
    if kind == "diag_scale":
        return DiagScale(tuple(d["scales"]))
    weights = d["weights"]
    if len({len(row) for row in weights}) != 1:
        raise ConfigError("linear weights must be a rectangular N x M array")
    return Linear(np.array(weights, dtype=float), d.get("prior", model_prior), d.get("trainable", False))


def _spec_from_dict(doc: dict) -> ModelSpec:
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"model config invalid at {path}: {exc.message}") from None
    layers = [_layer_from_json(d, doc["prior"]) for d in doc["layers"]]
    t = doc["terminal"]
    if t["type"] == "std_gaussian":
        dim = t.get("dim")
        if dim is None:
            dim = doc["input_dim"]
            for layer in layers:
                dim = layer.output_dim(dim)
        terminal = StandardGaussian(dim)
    else:
        if len(t["mean"]) != len(t["var"]):
            raise ConfigError("terminal mean and var lengths differ")
        terminal = DiagGaussian(tuple(t["mean"]), tuple(t["var"]))
    return ModelSpec(doc["input_dim"], doc["input_domain"], tuple(layers), terminal, doc["prior"])


def model_from_dict(doc: dict) -> Model:
    return validate_model(_spec_from_dict(doc))


def load_model(path) -> Model:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model config {path}: {exc}") from None
    return model_from_dict(doc)


def model_to_dict(model: Model) -> dict:
    spec = model.spec
    layers = []
    for layer in spec.layers:
        if isinstance(layer, Slice):
            layers.append({"type": "slice", "keep": layer.keep})
        elif isinstance(layer, Abs):
            layers.append({"type": "abs"})
        elif isinstance(layer, DiagScale):
            layers.append({"type": "diag_scale", "scales": list(layer.scales)})
        else:
            d = {"type": "linear", "weights": layer.weights.tolist(), "prior": layer.prior.value}
            if layer.trainable:
                d["trainable"] = True
            layers.append(d)
    t = spec.terminal
    if isinstance(t, StandardGaussian):
        terminal = {"type": "std_gaussian", "dim": t.dim}
    else:
        terminal = {"type": "diag_gaussian", "mean": list(t.mean), "var": list(t.var)}
    return {
        "input_dim": spec.input_dim,
        "input_domain": spec.input_domain.value,
        "prior": spec.prior.value,
        "layers": layers,
        "terminal": terminal,
    }


# ---------------------------------------------------------------------------
# CSV


def fmt(x: float) -> str:
    # 17 significant digits round-trip every double
    return format(float(x), ".17g")


def read_data(path, n_cols: int, header: bool = False) -> np.ndarray:
    """Read a rectangular CSV of reals; errors name the 0-based data row and the file line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from None
    rows = []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if header and lineno == 1:
            continue
        if not row or all(not c.strip() for c in row):
            continue
        data_row = len(rows)
        if len(row) != n_cols:
            raise ConfigError(f"row {data_row} (line {lineno}) has {len(row)} columns, expected {n_cols}")
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise ConfigError(f"row {data_row} (line {lineno}) has a non-numeric entry") from None
    return np.array(rows, dtype=float).reshape(len(rows), n_cols)


def write_csv_atomic(path, header, rows) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if header is not None:
                w.writerow(header)
            for row in rows:
                w.writerow([c if isinstance(c, str) else fmt(c) for c in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
