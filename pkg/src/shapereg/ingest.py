"""Dataset and run-configuration ingestion.

Dataset CSVs carry a header row, then d input columns followed by one output
column.  Inputs are affinely scaled onto the unit cube before solving; the
scaling ranges either come from the run configuration or default to the
per-column data extent, and they travel with the trained model so all
user-facing surfaces stay in original units.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError, ModelFormatError

RUN_CONFIG_FORMAT = "shape-run-config"


@dataclass
class Dataset:
    columns: list[str]
    x_raw: np.ndarray  # (n, d) original units
    y: np.ndarray  # (n,)

    @property
    def n(self) -> int:
        return self.x_raw.shape[0]

    @property
    def d(self) -> int:
        return self.x_raw.shape[1]

    def data_ranges(self) -> np.ndarray:
        lo = self.x_raw.min(axis=0)
        hi = self.x_raw.max(axis=0)
        for j, (a, b) in enumerate(zip(lo, hi)):
            if a >= b:
                raise CsvFormatError(
                    f"column '{self.columns[j]}' is constant; cannot derive a scaling range",
                    column=j + 1,
                )
        return np.column_stack([lo, hi])


def parse_dataset_csv(text: str, source: str = "<csv>") -> Dataset:
    """Parse a dataset CSV, reporting the first defect with line/column numbers."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    rows = [(i + 1, r) for i, r in enumerate(rows) if any(cell.strip() for cell in r)]
    if not rows:
        raise CsvFormatError(f"{source}: file is empty", line=1)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if len(header) < 2:
        raise CsvFormatError(
            f"{source}: header must name at least one input column and the output",
            line=header_line,
        )
    d = len(header) - 1
    data = []
    for line_no, row in rows[1:]:
        if len(row) != len(header):
            raise CsvFormatError(
                f"{source}:{line_no}: expected {len(header)} cells, found {len(row)}",
                line=line_no,
            )
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise CsvFormatError(
                    f"{source}:{line_no}: non-numeric value {cell.strip()!r} in column {col}",
                    line=line_no,
                    column=col,
                ) from None
        data.append(vals)
    if not data:
        raise CsvFormatError(f"{source}: no data rows", line=header_line)
    arr = np.asarray(data, dtype=float)
    return Dataset(columns=header, x_raw=arr[:, :d], y=arr[:, d])


def load_dataset_csv(path) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CsvFormatError(f"{path}: {exc.strerror or exc}") from exc
    return parse_dataset_csv(text, source=str(path))


@dataclass
class RunConfig:
    """Fitting configuration shared by the CLI and the service."""

    degrees: tuple[int, ...] = ()
    lam: float = 1e-2
    delta: float = 1e-4
    mode: str = "adaptive"  # "adaptive" | "grid" | "ridge"
    grid_points: int = 20
    seed: int = 0
    box_halfwidth: float = 1e5
    input_ranges: np.ndarray | None = None  # optional externally known ranges

    def __post_init__(self):
        self.degrees = tuple(int(g) for g in self.degrees)
        if self.mode not in ("adaptive", "grid", "ridge"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.input_ranges is not None:
            self.input_ranges = np.asarray(self.input_ranges, dtype=float).reshape(-1, 2)

    def to_doc(self) -> dict:
        doc = {
            "format": RUN_CONFIG_FORMAT,
            "version": 1,
            "degrees": list(self.degrees),
            "lambda": self.lam,
            "delta": self.delta,
            "mode": self.mode,
            "grid_points": self.grid_points,
            "seed": self.seed,
            "box_halfwidth": self.box_halfwidth,
        }
        if self.input_ranges is not None:
            doc["input_ranges"] = [[float(a), float(b)] for a, b in self.input_ranges]
        return doc


def config_from_doc(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ModelFormatError("run config must be a JSON object")
    try:
        return RunConfig(
            degrees=tuple(int(g) for g in doc.get("degrees", ())),
            lam=float(doc.get("lambda", 1e-2)),
            delta=float(doc.get("delta", 1e-4)),
            mode=str(doc.get("mode", "adaptive")),
            grid_points=int(doc.get("grid_points", 20)),
            seed=int(doc.get("seed", 0)),
            box_halfwidth=float(doc.get("box_halfwidth", 1e5)),
            input_ranges=doc.get("input_ranges"),
        )
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed run config: {exc}") from exc


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_doc(doc)


def resolve_ranges(dataset: Dataset, config: RunConfig) -> np.ndarray:
    """Scaling ranges: the configured ones when given, else the data extent."""
    if config.input_ranges is not None:
        ranges = config.input_ranges
        if ranges.shape[0] != dataset.d:
            raise ValueError(
                f"config provides {ranges.shape[0]} ranges for {dataset.d} inputs"
            )
        if np.any(ranges[:, 0] >= ranges[:, 1]):
            raise ValueError("input_ranges must satisfy min < max on every axis")
        return ranges
    return dataset.data_ranges()


def scale_to_cube(x_raw: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Scale raw training inputs onto the unit cube; they must lie inside the ranges."""
    lo, hi = ranges[:, 0], ranges[:, 1]
    z = (x_raw - lo) / (hi - lo)
    if np.any(z < -1e-9) or np.any(z > 1 + 1e-9):
        bad = int(np.argmax(np.maximum(-z, z - 1).max(axis=1)))
        raise ValueError(
            f"training row {bad} falls outside the configured input ranges"
        )
    return np.clip(z, 0.0, 1.0)
