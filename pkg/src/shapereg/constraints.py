"""Declarative shape constraints and their pointwise linearization.

Every constraint, frozen at a point ``x`` of the unit cube, is an affine
inequality in the model weights: ``a(x) @ w <= b``.  The ``linearize``
mapping below is the single source of truth for that row; the batched
evaluators reuse the same term decomposition for fast scans over many points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ModelFormatError, VersionMismatch
from . import features as ft

CONSTRAINT_SET_FORMAT = "shape-constraint-set"
CONSTRAINT_SET_VERSION = 1


class ConstraintKind(str, Enum):
    LOWER_BOUND = "lower_bound"
    UPPER_BOUND = "upper_bound"
    MONOTONE_INCREASING = "monotone_increasing"
    MONOTONE_DECREASING = "monotone_decreasing"
    CONVEX = "convex"
    CONCAVE = "concave"
    REBOUND = "rebound"


_BOUND_KINDS = (ConstraintKind.LOWER_BOUND, ConstraintKind.UPPER_BOUND)


@dataclass(frozen=True)
class ShapeConstraint:
    """One shape requirement on the model function.

    ``level`` is the bound value for bound constraints.  ``rebound_factor``
    and ``rebound_cap`` parametrize the rebound constraint: the function's
    slope along ``axis`` may not exceed ``rebound_factor`` times the headroom
    below ``rebound_cap``.  ``relax`` loosens the constraint uniformly by a
    non-negative slack.
    """

    kind: ConstraintKind
    axis: int | None = None
    level: float = 0.0
    rebound_factor: float = 0.0
    rebound_cap: float = 0.0
    relax: float = 0.0

    def __post_init__(self):
        kind = ConstraintKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in _BOUND_KINDS:
            if self.axis is not None:
                raise ValueError(f"{kind.value} constraints take no axis")
        else:
            if self.axis is None:
                raise ValueError(f"{kind.value} constraints require an axis")
            if self.axis < 0:
                raise ValueError("axis must be non-negative")
        if kind is ConstraintKind.REBOUND and self.rebound_factor < 0:
            raise ValueError("rebound_factor must be non-negative")
        if self.relax < 0:
            raise ValueError("relax must be non-negative")

    def check_dimension(self, d: int) -> None:
        if self.axis is not None and not 0 <= self.axis < d:
            raise ValueError(f"axis {self.axis} out of range for {d} inputs")

    def describe(self) -> str:
        if self.kind is ConstraintKind.LOWER_BOUND:
            core = f"lower bound {self.level}"
        elif self.kind is ConstraintKind.UPPER_BOUND:
            core = f"upper bound {self.level}"
        elif self.kind is ConstraintKind.REBOUND:
            core = (
                f"rebound on axis {self.axis} "
                f"(factor {self.rebound_factor}, cap {self.rebound_cap})"
            )
        else:
            core = f"{self.kind.value.replace('_', ' ')} on axis {self.axis}"
        if self.relax:
            core += f", relaxed by {self.relax}"
        return core


@dataclass(frozen=True)
class ConstraintRow:
    """The constraint at one fixed point, as the inequality a @ w <= b."""

    a: np.ndarray
    b: float


def _terms(c: ShapeConstraint, d: int) -> list[tuple[float, np.ndarray]]:
    """Decompose the constraint function into (coefficient, derivative-order) terms.

    The constraint value at x is ``sum_t coef_t * (w @ d^orders_t features(x)) - offset``.
    """
    zero = np.zeros(d, dtype=np.int64)

    def axis_orders(order: int) -> np.ndarray:
        o = np.zeros(d, dtype=np.int64)
        o[c.axis] = order
        return o

    kind = c.kind
    if kind is ConstraintKind.UPPER_BOUND:
        return [(1.0, zero)]
    if kind is ConstraintKind.LOWER_BOUND:
        return [(-1.0, zero)]
    if kind is ConstraintKind.MONOTONE_INCREASING:
        return [(-1.0, axis_orders(1))]
    if kind is ConstraintKind.MONOTONE_DECREASING:
        return [(1.0, axis_orders(1))]
    if kind is ConstraintKind.CONVEX:
        return [(-1.0, axis_orders(2))]
    if kind is ConstraintKind.CONCAVE:
        return [(1.0, axis_orders(2))]
    if kind is ConstraintKind.REBOUND:
        return [(1.0, axis_orders(1)), (float(c.rebound_factor), zero)]
    raise ValueError(f"unknown constraint kind {kind!r}")


def _offset(c: ShapeConstraint) -> float:
    """Right-hand side b of the linearized row (including the relax slack)."""
    kind = c.kind
    if kind is ConstraintKind.UPPER_BOUND:
        return float(c.level) + c.relax
    if kind is ConstraintKind.LOWER_BOUND:
        return -float(c.level) + c.relax
    if kind is ConstraintKind.REBOUND:
        return float(c.rebound_factor) * float(c.rebound_cap) + c.relax
    return float(c.relax)


@lru_cache(maxsize=512)
def coefficient_matrix(c: ShapeConstraint, fm: ft.FeatureMap) -> np.ndarray:
    """Basis-coefficient transform T of the constraint functional.

    For any weights w, the constraint value is
    ``g(w, x) = features(x) @ (T @ w) - offset``: differentiation only lowers
    exponents, so the functional stays inside the basis span and the whole
    constraint reduces to a fixed m-by-m transform.  FeatureMap instances
    hash by identity, making the cache effective within one solve.
    """
    c.check_dimension(fm.input_dim)
    lookup = ft.basis_index(fm)
    m = fm.dimension
    mat = np.zeros((m, m))
    for tcoef, orders in _terms(c, fm.input_dim):
        coef, shifted = ft.partial_coefficients(fm, orders)
        cols = np.nonzero(coef)[0]
        rows = np.fromiter(
            (lookup[tuple(int(e) for e in shifted[i])] for i in cols),
            dtype=np.int64,
            count=cols.shape[0],
        )
        np.add.at(mat, (rows, cols), tcoef * coef[cols])
    return mat


def constraint_coefficients(
    c: ShapeConstraint, fm: ft.FeatureMap, weights: np.ndarray
) -> tuple[np.ndarray, float]:
    """Effective basis coefficients v and offset b with g(w, x) = features(x) @ v - b."""
    W = np.asarray(weights, dtype=float)
    if W.shape[0] != fm.dimension:
        raise ValueError("weights do not match the feature map dimension")
    return coefficient_matrix(c, fm) @ W, _offset(c)


def linearize(c: ShapeConstraint, fm: ft.FeatureMap, x) -> ConstraintRow:
    """Freeze the constraint at ``x`` into the row a @ w <= b."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != fm.input_dim:
        raise ValueError(
            f"point has {x.shape[0]} coordinates, feature map expects {fm.input_dim}"
        )
    a = ft.eval_features(fm, x) @ coefficient_matrix(c, fm)
    return ConstraintRow(a=a, b=_offset(c))


def linearize_batch(
    c: ShapeConstraint, fm: ft.FeatureMap, points: np.ndarray
) -> tuple[np.ndarray, float]:
    """Rows for many points at once: returns (A (n, m), b)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    a = ft.design_matrix(fm, points) @ coefficient_matrix(c, fm)
    return a, _offset(c)


def evaluate_constraint(c: ShapeConstraint, fm: ft.FeatureMap, w, x) -> float:
    """Constraint value g = a(x) @ w - b; g <= 0 means satisfied at x."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != fm.dimension:
        raise ValueError(
            f"weights have length {w.shape[0]}, feature map dimension is {fm.dimension}"
        )
    v, b = constraint_coefficients(c, fm, w)
    return float(ft.eval_features(fm, x) @ v - b)


def constraint_values(
    c: ShapeConstraint,
    fm: ft.FeatureMap,
    weights: np.ndarray,
    points: np.ndarray,
    tables: list[np.ndarray] | None = None,
    basis_matrix: np.ndarray | None = None,
    chunk: int = 65536,
) -> np.ndarray:
    """Constraint values at many points for one or several weight vectors.

    ``weights`` may be (m,) for a single vector or (m, q) for q vectors; the
    result is (n,) or (n, q) accordingly.  Passing ``basis_matrix`` (the
    feature design matrix of ``points``) turns repeated scans over a fixed
    point set into plain matrix products; ``tables`` may instead carry
    precomputed per-axis power tables.
    """
    W = np.asarray(weights, dtype=float)
    single = W.ndim == 1
    if single:
        W = W[:, None]
    folded, b = constraint_coefficients(c, fm, W)
    if basis_matrix is not None:
        out = basis_matrix @ folded - b
        return out[:, 0] if single else out
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    out = np.empty((n, W.shape[1]))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sub = [t[start:stop] for t in tables] if tables is not None else None
        mono = ft.monomial_matrix(points[start:stop], fm.exponents, tables=sub)
        out[start:stop] = mono @ folded
    out -= b
    return out[:, 0] if single else out


def axis_line_values(
    c: ShapeConstraint,
    fm: ft.FeatureMap,
    w: np.ndarray,
    anchors: np.ndarray,
    line: np.ndarray,
) -> np.ndarray:
    """Constraint values along the constraint's axis through many anchors.

    Exploits the product structure of the sweep: entry (i, t) is the value at
    the anchor ``i`` with its axis coordinate replaced by ``line[t]``, at the
    cost of one small anchor scan instead of n_anchors * n_line full points.
    """
    if c.axis is None:
        raise ValueError("axis sweep requires an axis-bound constraint")
    axis = c.axis
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    line = np.asarray(line, dtype=float).reshape(-1)
    v, b = constraint_coefficients(c, fm, np.asarray(w, dtype=float))
    exps_off = fm.exponents.copy()
    exps_off[:, axis] = 0
    off_axis = ft.monomial_matrix(anchors, exps_off)  # (n, m)
    deg = int(fm.degrees[axis])
    axis_exp = fm.exponents[:, axis]
    per_degree = np.zeros((anchors.shape[0], deg + 1))
    for k in range(deg + 1):
        cols = axis_exp == k
        if np.any(cols):
            per_degree[:, k] = off_axis[:, cols] @ v[cols]
    line_pow = line[:, None] ** np.arange(deg + 1)  # (L, deg+1)
    return per_degree @ line_pow.T - b


def constraint_gradient(
    c: ShapeConstraint, fm: ft.FeatureMap, w: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Gradient of x -> g(w, x) at one point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    v, _ = constraint_coefficients(c, fm, np.asarray(w, dtype=float))
    phi = ft.eval_features(fm, x)
    return np.array(
        [float(phi @ (ft.derivative_matrix(fm, axis) @ v)) for axis in range(fm.input_dim)]
    )


# ---------------------------------------------------------------------------
# constraint-set documents


def constraint_to_record(c: ShapeConstraint) -> dict:
    return {
        "kind": c.kind.value,
        "axis": c.axis,
        "level": c.level,
        "rho": c.rebound_factor,
        "cap": c.rebound_cap,
        "relax": c.relax,
    }


def constraint_from_record(rec: dict) -> ShapeConstraint:
    if not isinstance(rec, dict) or "kind" not in rec:
        raise ModelFormatError(f"constraint record must be a mapping with a kind: {rec!r}")
    try:
        kind = ConstraintKind(rec["kind"])
    except ValueError as exc:
        raise ModelFormatError(f"unknown constraint kind {rec['kind']!r}") from exc
    axis = rec.get("axis")
    return ShapeConstraint(
        kind=kind,
        axis=None if axis is None else int(axis),
        level=float(rec.get("level", 0.0)),
        rebound_factor=float(rec.get("rho", 0.0)),
        rebound_cap=float(rec.get("cap", 0.0)),
        relax=float(rec.get("relax", 0.0)),
    )


def constraints_to_doc(constraints) -> dict:
    return {
        "format": CONSTRAINT_SET_FORMAT,
        "version": CONSTRAINT_SET_VERSION,
        "constraints": [constraint_to_record(c) for c in constraints],
    }


def constraints_from_doc(doc: dict) -> tuple[ShapeConstraint, ...]:
    if not isinstance(doc, dict) or doc.get("format") != CONSTRAINT_SET_FORMAT:
        raise ModelFormatError("not a constraint-set document")
    if doc.get("version") != CONSTRAINT_SET_VERSION:
        raise VersionMismatch(
            f"unsupported constraint-set version {doc.get('version')!r}"
        )
    return tuple(constraint_from_record(r) for r in doc.get("constraints", []))


def save_constraints(path, constraints) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(constraints_to_doc(constraints), fh, indent=2)
        fh.write("\n")


def load_constraints(path) -> tuple[ShapeConstraint, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    return constraints_from_doc(doc)


def relaxed(c: ShapeConstraint, relax: float) -> ShapeConstraint:
    """Copy of the constraint with a different relaxation slack."""
    return replace(c, relax=float(relax))
