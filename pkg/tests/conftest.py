"""Shared fixtures and independent oracles used across the test suite.

The oracles here deliberately avoid the library's own computation paths:
enumeration by exhaustive scanning, derivatives by finite differences, QPs
by enumerating candidate active sets, and global maxima by dense grids.
"""

from __future__ import annotations

from itertools import combinations, product

import numpy as np
import pytest

from shapereg import constraints as cs
from shapereg import features as ft


def brute_force_indices(degrees) -> set[tuple[int, ...]]:
    """All exponent vectors under the componentwise and total-degree caps."""
    cap = max(degrees)
    return {
        a
        for a in product(*(range(g + 1) for g in degrees))
        if sum(a) <= cap
    }


def fd_gradient(fn, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        out[j] = (fn(x + e) - fn(x - e)) / (2 * h)
    return out


def brute_force_qp(phi, y, lam, rows_a, rows_b, lo, hi, tol=1e-9):
    """Reference QP solution by enumerating candidate active sets.

    Stacks the box as rows, solves the equality-constrained optimum for
    every row subset of size <= m, and keeps the feasible candidate with
    non-negative multipliers and least objective.  Returns (w, objective)
    or None when no subset yields a feasible point (infeasible system).
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    m = phi.shape[1]
    eye = np.eye(m)
    a_all = np.vstack([np.asarray(rows_a, dtype=float).reshape(-1, m), eye, -eye])
    b_all = np.concatenate(
        [np.asarray(rows_b, dtype=float).reshape(-1), np.asarray(hi), -np.asarray(lo)]
    )
    hess = 2.0 * (phi.T @ phi + lam * np.eye(m))
    lin = -2.0 * (phi.T @ np.asarray(y, dtype=float))

    def objective(w):
        r = phi @ w - y
        return float(r @ r + lam * (w @ w))

    best = None
    n_rows = a_all.shape[0]
    for size in range(0, m + 1):
        for subset in combinations(range(n_rows), size):
            nmat = a_all[list(subset)]
            kkt = np.zeros((m + size, m + size))
            kkt[:m, :m] = hess
            if size:
                kkt[:m, m:] = nmat.T
                kkt[m:, :m] = nmat
            rhs = np.concatenate([-lin, b_all[list(subset)]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            w, mu = sol[:m], sol[m:]
            if size and np.any(mu < -1e-8):
                continue
            if np.any(a_all @ w - b_all > tol):
                continue
            obj = objective(w)
            if best is None or obj < best[1] - 1e-12:
                best = (w, obj)
    return best


def dense_grid_max(c, fm, w, points_per_axis) -> float:
    """Dense tensor-grid maximum of the constraint value (independent oracle)."""
    d = fm.input_dim
    axes = [np.linspace(0.0, 1.0, points_per_axis)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=1)
    vals = cs.constraint_values(c, fm, w, pts)
    return float(vals.max())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


def random_feature_map(rng, d_max=5, deg_max=5) -> ft.FeatureMap:
    d = int(rng.integers(1, d_max + 1))
    degrees = tuple(int(g) for g in rng.integers(0, deg_max + 1, size=d))
    if max(degrees) == 0:
        degrees = degrees[:-1] + (1,)
    return ft.enumerate_multi_indices(degrees)
