"""Anisotropic polynomial feature maps on the unit cube.

A feature map is a fixed, ordered monomial basis over ``[0, 1]^d`` with a
separate maximal degree per input axis and an overall total-degree cap equal
to the largest per-axis degree.  Model functions are then linear in the
basis: ``yhat(x) = w @ features(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

MultiIndex = tuple[int, ...]

# Guard against accidentally enormous tensor-product scans; the intended
# problem scale is a handful of axes with single-digit degrees.
_ENUMERATION_CAP = 5_000_000


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Ordered monomial basis with per-axis degree caps and a total-degree cap.

    The basis contains exactly the exponent vectors ``alpha`` with
    ``alpha[j] <= degrees[j]`` for every axis ``j`` and
    ``sum(alpha) <= max(degrees)``.  Ordering is graded lexicographic:
    ascending total degree, and within a degree class the earlier axes carry
    the higher exponents first (``1, x1, x2, x1^2, x1*x2, x2^2, ...``), so the
    constant term is always slot 0.
    """

    degrees: tuple[int, ...]
    exponents: np.ndarray  # (m, d) integer array, one row per monomial

    @property
    def input_dim(self) -> int:
        return len(self.degrees)

    @property
    def dimension(self) -> int:
        return self.exponents.shape[0]

    @property
    def indices(self) -> list[MultiIndex]:
        return [tuple(int(e) for e in row) for row in self.exponents]


def enumerate_multi_indices(degrees) -> FeatureMap:
    """Build the feature map for the given per-axis maximal degrees.

    Deterministic: the same degrees always produce the identical basis order.
    """
    degs = tuple(int(g) for g in degrees)
    if len(degs) == 0:
        raise ValueError("degrees must have at least one entry")
    if any(g < 0 for g in degs):
        raise ValueError(f"degrees must be non-negative, got {degs}")
    n_candidates = 1
    for g in degs:
        n_candidates *= g + 1
        if n_candidates > _ENUMERATION_CAP:
            raise ValueError(
                f"degrees {degs} span more than {_ENUMERATION_CAP} candidate monomials"
            )
    cap = max(degs)
    alphas = [a for a in product(*(range(g + 1) for g in degs)) if sum(a) <= cap]
    alphas.sort(key=lambda a: (sum(a), tuple(-e for e in a)))
    exps = np.asarray(alphas, dtype=np.int64).reshape(len(alphas), len(degs))
    exps.setflags(write=False)
    return FeatureMap(degrees=degs, exponents=exps)


def _check_point(fm: FeatureMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != fm.input_dim:
        raise ValueError(
            f"point has {x.shape[0]} coordinates, feature map expects {fm.input_dim}"
        )
    return x


def eval_features(fm: FeatureMap, x) -> np.ndarray:
    """Evaluate every basis monomial at ``x`` (with the 0^0 = 1 convention)."""
    x = _check_point(fm, x)
    return np.prod(x[None, :] ** fm.exponents, axis=1)


def falling_factorial(exponents: np.ndarray, orders: np.ndarray) -> np.ndarray:
    """Per-entry falling factorial e * (e-1) * ... * (e-o+1), zero when e < o."""
    out = np.ones(exponents.shape, dtype=float)
    max_order = int(orders.max()) if orders.size else 0
    for k in range(max_order):
        step = np.where(k < orders, exponents - k, 1)
        out *= step
    out[exponents < orders] = 0.0
    return out


def partial_coefficients(
    fm: FeatureMap, orders: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients and shifted exponents of the mixed partial d^orders.

    Returns ``(coef, shifted)`` such that the derivative of monomial ``i`` is
    ``coef[i] * x ** shifted[i]``; entries with ``coef[i] == 0`` vanish.
    """
    orders = np.asarray(orders, dtype=np.int64).reshape(-1)
    if orders.shape[0] != fm.input_dim:
        raise ValueError("derivative orders must have one entry per axis")
    coef = np.prod(falling_factorial(fm.exponents, orders[None, :]), axis=1)
    shifted = np.maximum(fm.exponents - orders[None, :], 0)
    return coef, shifted


def eval_derivative(fm: FeatureMap, x, axis: int, order: int) -> np.ndarray:
    """Exact order-1 or order-2 partial derivative of every basis monomial."""
    if order not in (1, 2):
        raise ValueError(f"derivative order must be 1 or 2, got {order}")
    if not 0 <= axis < fm.input_dim:
        raise ValueError(f"axis {axis} out of range for dimension {fm.input_dim}")
    x = _check_point(fm, x)
    orders = np.zeros(fm.input_dim, dtype=np.int64)
    orders[axis] = order
    coef, shifted = partial_coefficients(fm, orders)
    return coef * np.prod(x[None, :] ** shifted, axis=1)


def power_tables(points: np.ndarray, max_degrees) -> list[np.ndarray]:
    """Per-axis tables of x^0 .. x^deg for a batch of points ((n, d) input)."""
    points = np.asarray(points, dtype=float)
    return [
        points[:, j, None] ** np.arange(int(g) + 1)
        for j, g in enumerate(max_degrees)
    ]


def monomial_matrix(
    points: np.ndarray, exponents: np.ndarray, tables: list[np.ndarray] | None = None
) -> np.ndarray:
    """Matrix of x ** alpha for a batch of points: entry (k, i) = points[k] ** exponents[i]."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != exponents.shape[1]:
        raise ValueError("points must be (n, d) matching the exponent columns")
    if tables is None:
        tables = power_tables(points, exponents.max(axis=0, initial=0))
    out = tables[0][:, exponents[:, 0]].copy()
    for j in range(1, exponents.shape[1]):
        out *= tables[j][:, exponents[:, j]]
    return out


def design_matrix(fm: FeatureMap, points: np.ndarray) -> np.ndarray:
    """Feature matrix with one row per input point: row k is features(points[k])."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != fm.input_dim:
        raise ValueError(
            f"points must be (n, {fm.input_dim}), got shape {points.shape}"
        )
    return monomial_matrix(points, fm.exponents)


@lru_cache(maxsize=256)
def basis_index(fm: FeatureMap) -> dict[MultiIndex, int]:
    """Exponent-tuple -> basis-slot lookup (FeatureMap hashes by identity)."""
    return {tuple(int(e) for e in row): i for i, row in enumerate(fm.exponents)}


@lru_cache(maxsize=256)
def derivative_matrix(fm: FeatureMap, axis: int) -> np.ndarray:
    """Coefficient map D of d/dx_axis: if p = phi @ v then dp/dx_axis = phi @ (D @ v).

    Well-defined because lowering an exponent keeps every monomial inside the
    per-axis and total-degree caps, so the derivative stays in the basis span.
    """
    if not 0 <= axis < fm.input_dim:
        raise ValueError(f"axis {axis} out of range for dimension {fm.input_dim}")
    lookup = basis_index(fm)
    m = fm.dimension
    mat = np.zeros((m, m))
    for col, alpha in enumerate(fm.exponents):
        k = int(alpha[axis])
        if k == 0:
            continue
        shifted = list(alpha)
        shifted[axis] = k - 1
        mat[lookup[tuple(shifted)], col] = float(k)
    return mat
