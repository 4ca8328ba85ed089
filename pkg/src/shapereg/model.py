"""Trained model value object: prediction, slice extraction, serialization.

The model owns the affine scaling between original input units and the unit
cube the solver works on, so every caller-facing surface (prediction, slices,
the service, the CLI) speaks original units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import constraints as cs
from . import features as ft
from .errors import ModelFormatError, VersionMismatch

MODEL_FORMAT = "shape-model"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class TrainedModel:
    feature_map: ft.FeatureMap
    w: np.ndarray
    input_ranges: np.ndarray  # (d, 2) per-axis (min, max) in original units
    constraint_set: tuple[cs.ShapeConstraint, ...] = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        if w.shape[0] != self.feature_map.dimension:
            raise ValueError("weight length does not match the feature map")
        ranges = np.asarray(self.input_ranges, dtype=float).reshape(-1, 2)
        if ranges.shape[0] != self.feature_map.input_dim:
            raise ValueError("input_ranges must have one (min, max) pair per axis")
        if np.any(ranges[:, 0] >= ranges[:, 1]):
            raise ValueError("input_ranges must satisfy min < max on every axis")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "input_ranges", ranges)
        object.__setattr__(self, "constraint_set", tuple(self.constraint_set))

    @property
    def input_dim(self) -> int:
        return self.feature_map.input_dim

    def scale(self, x_raw: np.ndarray) -> np.ndarray:
        """Map original-unit points onto the unit cube."""
        x_raw = np.asarray(x_raw, dtype=float)
        lo, hi = self.input_ranges[:, 0], self.input_ranges[:, 1]
        return (x_raw - lo) / (hi - lo)

    def unscale(self, x_cube: np.ndarray) -> np.ndarray:
        x_cube = np.asarray(x_cube, dtype=float)
        lo, hi = self.input_ranges[:, 0], self.input_ranges[:, 1]
        return lo + x_cube * (hi - lo)

    def extrapolates(self, x_raw) -> bool:
        """True when the point falls outside the stored input ranges."""
        z = self.scale(np.asarray(x_raw, dtype=float).reshape(-1))
        return bool(np.any(z < 0.0) or np.any(z > 1.0))

    def predict(self, x_raw) -> float:
        """Model value at one original-unit point (out-of-range accepted)."""
        x_raw = np.asarray(x_raw, dtype=float).reshape(-1)
        if x_raw.shape[0] != self.input_dim:
            raise ValueError(
                f"point has {x_raw.shape[0]} coordinates, model expects {self.input_dim}"
            )
        z = self.scale(x_raw)
        return float(ft.eval_features(self.feature_map, z) @ self.w)

    def predict_batch(self, x_raw: np.ndarray) -> np.ndarray:
        x_raw = np.asarray(x_raw, dtype=float)
        if x_raw.ndim != 2 or x_raw.shape[1] != self.input_dim:
            raise ValueError(f"points must be (n, {self.input_dim})")
        z = self.scale(x_raw)
        return ft.design_matrix(self.feature_map, z) @ self.w

    def predict_cube(self, x_cube: np.ndarray) -> np.ndarray:
        """Model values at already-scaled points of the unit cube."""
        x_cube = np.atleast_2d(np.asarray(x_cube, dtype=float))
        return ft.design_matrix(self.feature_map, x_cube) @ self.w


def slice_model(model: TrainedModel, anchor_raw, axis: int, resolution: int):
    """Model values along one axis through an anchor point.

    Returns ``resolution`` equidistant (t, yhat) pairs spanning the axis's
    full original-unit range, the other coordinates fixed at the anchor.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if not 0 <= axis < model.input_dim:
        raise ValueError(f"axis {axis} out of range for dimension {model.input_dim}")
    anchor_raw = np.asarray(anchor_raw, dtype=float).reshape(-1)
    if anchor_raw.shape[0] != model.input_dim:
        raise ValueError("anchor has the wrong number of coordinates")
    lo, hi = model.input_ranges[axis]
    ts = np.linspace(lo, hi, resolution)
    pts = np.tile(anchor_raw, (resolution, 1))
    pts[:, axis] = ts
    ys = model.predict_batch(pts)
    return [(float(t), float(v)) for t, v in zip(ts, ys)]


def model_to_doc(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_map": {"degrees": list(model.feature_map.degrees)},
        "weights": [float(v) for v in model.w],
        "input_ranges": [[float(a), float(b)] for a, b in model.input_ranges],
        "constraints": [cs.constraint_to_record(c) for c in model.constraint_set],
        "provenance": dict(model.provenance),
    }


def model_from_doc(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a model document")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"unsupported model version {doc.get('version')!r}")
    try:
        fm = ft.enumerate_multi_indices(doc["feature_map"]["degrees"])
        return TrainedModel(
            feature_map=fm,
            w=np.asarray(doc["weights"], dtype=float),
            input_ranges=np.asarray(doc["input_ranges"], dtype=float),
            constraint_set=tuple(
                cs.constraint_from_record(r) for r in doc.get("constraints", [])
            ),
            provenance=dict(doc.get("provenance", {})),
        )
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc


def serialize(model: TrainedModel) -> bytes:
    """Self-describing JSON document; float round-trips are lossless."""
    return (json.dumps(model_to_doc(model), indent=2) + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> TrainedModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from exc
    return model_from_doc(doc)


def save_model(path, model: TrainedModel) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def unit_ranges(d: int) -> np.ndarray:
    """Identity scaling: inputs already live on the unit cube."""
    return np.column_stack([np.zeros(d), np.ones(d)])
