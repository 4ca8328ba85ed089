"""Approximate global maximization of a constraint function over the unit cube.

For fixed weights the constraint value g(w, x) is a polynomial in x; its
maximum over [0, 1]^d certifies feasibility (max <= 0) or yields violating
points to add to the working discretization.  The search has three stages:

* a coarse scan - a full tensor grid when affordable, otherwise
  low-discrepancy samples split between the cube interior and its faces
  (polynomial maxima frequently sit on faces, which interior sampling
  misses almost surely);
* for axis-bound constraints, a line sweep - equidistant points along the
  constraint's axis through a fixed set of anchor points, mirroring how
  shape compliance is audited;
* projected-gradient ascent from the best seeds of both stages.

The returned value is always one that was actually evaluated, so it is a
valid lower bound on the true maximum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from . import constraints as cs
from . import features as ft


@dataclass(frozen=True)
class LowerLevelOptions:
    """Search budget and tolerances for one constraint maximization."""

    grid_points: int = 20  # target points per axis for the full-grid scan
    budget: int = 100_000  # max evaluations for the coarse scan
    min_grid: int = 17  # below this per-axis resolution, switch to sampling
    n_seeds: int = 10  # ascent starts from this many best points per stage
    ascent_max_iter: int = 100
    ascent_grad_tol: float = 1e-10
    seed: int = 0  # seeds the low-discrepancy sampler
    sweep_anchors: int = 2048  # anchors for the per-axis line sweep
    sweep_line: int = 100  # equidistant points per sweep line

    def resolution(self, d: int) -> int:
        """Largest per-axis grid size within budget (capped at grid_points)."""
        g = self.grid_points
        while g >= 2 and g**d > self.budget:
            g -= 1
        return g


@dataclass(frozen=True)
class LowerLevelResult:
    x_star: np.ndarray  # maximizer found, inside [0, 1]^d
    value: float  # g(w, x_star), exactly re-evaluated at x_star
    certified_gap: float  # crude scan-resolution bound slack
    # distinct candidate maximizers with their values; the discretization
    # loop uses these to add several cuts per round
    candidate_points: np.ndarray = None
    candidate_values: np.ndarray = None


@lru_cache(maxsize=8)
def _scan_points(d: int, opts: LowerLevelOptions) -> tuple[np.ndarray, float, bool]:
    """Coarse scan point set, effective spacing, and grid flag; cached per dimension.

    In sampling mode roughly half the budget covers the open cube and the
    rest is projected onto the 2d faces.
    """
    g = opts.resolution(d)
    if g >= opts.min_grid:
        axes = [np.linspace(0.0, 1.0, g)] * d
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
        return pts, 1.0 / (g - 1), True
    per_face = max(1, (opts.budget // 2) // (2 * d))
    n_interior = opts.budget - per_face * 2 * d
    sampler = qmc.Sobol(d, scramble=True, seed=opts.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # budget need not be a power of two
        interior = sampler.random(n_interior)
    faces = []
    for j in range(d):
        for side in (0.0, 1.0):
            start = (2 * j + int(side)) * per_face % max(n_interior - per_face, 1)
            block = interior[start : start + per_face].copy()
            block[:, j] = side
            faces.append(block)
    pts = np.vstack([interior] + faces)
    return pts, float(n_interior) ** (-1.0 / d), False


@lru_cache(maxsize=8)
def _sweep_anchors(d: int, opts: LowerLevelOptions) -> np.ndarray:
    sampler = qmc.Sobol(d, scramble=True, seed=opts.seed + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return sampler.random(opts.sweep_anchors)


@lru_cache(maxsize=2)
def _scan_basis(fm: ft.FeatureMap, opts: LowerLevelOptions) -> np.ndarray:
    """Feature design matrix of the scan point set, shared across constraints."""
    pts, _, _ = _scan_points(fm.input_dim, opts)
    return ft.design_matrix(fm, pts)


class _Surface:
    """One constraint functional at fixed weights: cheap point/gradient evals."""

    def __init__(self, c: cs.ShapeConstraint, fm: ft.FeatureMap, w: np.ndarray):
        self.fm = fm
        self.v, self.b = cs.constraint_coefficients(c, fm, w)
        self.dv = np.stack(
            [ft.derivative_matrix(fm, axis) @ self.v for axis in range(fm.input_dim)],
            axis=1,
        )  # (m, d)

    def values(self, pts: np.ndarray) -> np.ndarray:
        phi = ft.monomial_matrix(np.atleast_2d(pts), self.fm.exponents)
        return phi @ self.v - self.b

    def gradients(self, pts: np.ndarray) -> np.ndarray:
        phi = ft.monomial_matrix(np.atleast_2d(pts), self.fm.exponents)
        return phi @ self.dv  # (n, d)


def _ascend_batch(surface: _Surface, seeds: np.ndarray, vals: np.ndarray, opts: LowerLevelOptions):
    """Projected-gradient ascent with backtracking, run on all seeds at once.

    Seeds stop when their projected gradient is tiny or a successful step no
    longer improves the value meaningfully; the loop ends when all stop.
    """
    x = seeds.copy()
    v = vals.copy()
    step = np.ones(x.shape[0])
    alive = np.ones(x.shape[0], dtype=bool)
    for _ in range(opts.ascent_max_iter):
        if not alive.any():
            break
        grad = np.zeros_like(x)
        grad[alive] = surface.gradients(x[alive])
        proj = grad.copy()
        proj[(x <= 0.0) & (grad < 0.0)] = 0.0
        proj[(x >= 1.0) & (grad > 0.0)] = 0.0
        gnorm = np.linalg.norm(proj, axis=1)
        alive &= gnorm > opts.ascent_grad_tol
        if not alive.any():
            break
        trying = alive.copy()
        t = step / np.maximum(gnorm, 1.0)
        improved = np.zeros(x.shape[0], dtype=bool)
        for _ in range(40):
            if not trying.any():
                break
            idx = np.nonzero(trying)[0]
            cand = np.clip(x[idx] + t[idx, None] * grad[idx], 0.0, 1.0)
            cand_v = surface.values(cand)
            better = cand_v > v[idx]
            good = idx[better]
            gain = cand_v[better] - v[good]
            x[good] = cand[better]
            v[good] = cand_v[better]
            step[good] = np.minimum(t[good] * np.maximum(gnorm[good], 1.0) * 2.0, 1e6)
            improved[good] = True
            # negligible progress on a successful step: seed has converged
            alive[good[gain <= 1e-12 * (1.0 + np.abs(v[good]))]] = False
            bad = idx[~better]
            t[bad] *= 0.5
            trying[good] = False
            trying[t <= 1e-14] = False
        alive &= improved
    return x, v


def _top_seeds(vals: np.ndarray, k: int) -> np.ndarray:
    k = min(k, vals.shape[0])
    idx = np.argpartition(-vals, k - 1)[:k]
    return idx[np.argsort(-vals[idx], kind="stable")]


def maximize_constraint_multi(
    c: cs.ShapeConstraint,
    fm: ft.FeatureMap,
    weights: np.ndarray,
    opts: LowerLevelOptions | None = None,
    basis_matrix: np.ndarray | None = None,
) -> list[LowerLevelResult]:
    """Maximize g(w_q, .) for every weight column w_q sharing one coarse scan."""
    opts = opts or LowerLevelOptions()
    W = np.asarray(weights, dtype=float)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != fm.dimension:
        raise ValueError("weights do not match the feature map dimension")
    d = fm.input_dim
    pts, spacing, is_grid = _scan_points(d, opts)
    if basis_matrix is None:
        basis_matrix = _scan_basis(fm, opts)
    vals = cs.constraint_values(c, fm, W, pts, basis_matrix=basis_matrix)  # (n, q)

    sweep = c.axis is not None and d > 1
    if sweep:
        anchors = _sweep_anchors(d, opts)
        line = np.linspace(0.0, 1.0, opts.sweep_line)

    results = []
    for q in range(W.shape[1]):
        w = W[:, q]
        vq = vals[:, q]
        seed_idx = _top_seeds(vq, opts.n_seeds)
        seed_pts = [pts[seed_idx]]
        seed_vals = [vq[seed_idx]]
        if sweep:
            sweep_vals = cs.axis_line_values(c, fm, w, anchors, line)
            flat = sweep_vals.reshape(-1)
            top = _top_seeds(flat, opts.n_seeds)
            a_idx, l_idx = np.unravel_index(top, sweep_vals.shape)
            sw_pts = anchors[a_idx].copy()
            sw_pts[:, c.axis] = line[l_idx]
            seed_pts.append(sw_pts)
            seed_vals.append(flat[top])
        seeds = np.vstack(seed_pts)
        seed_v = np.concatenate(seed_vals)

        surface = _Surface(c, fm, w)
        xs, vs = _ascend_batch(surface, seeds, seed_v, opts)
        best = int(np.argmax(vs))
        best_x = xs[best]
        if vs[best] < seed_v[0]:  # never fall below the scan stage
            best_x = seeds[0].copy()
        # exact single-point re-evaluation pins the reported value
        best_v = cs.evaluate_constraint(c, fm, w, best_x)
        grad_scale = float(np.max(np.linalg.norm(surface.gradients(xs), axis=1)))
        gap = _certified_gap(vq, d, spacing, is_grid, opts, grad_scale)
        results.append(
            LowerLevelResult(
                x_star=best_x,
                value=best_v,
                certified_gap=gap,
                candidate_points=xs,
                candidate_values=vs,
            )
        )
    return results


def _certified_gap(
    vals: np.ndarray,
    d: int,
    spacing: float,
    is_grid: bool,
    opts: LowerLevelOptions,
    grad_scale: float,
) -> float:
    """Crude optimality slack: scan spacing times an observed slope bound."""
    if is_grid:
        g = opts.resolution(d)
        grid = vals.reshape((g,) * d)
        lip = 0.0
        for axis in range(d):
            diffs = np.abs(np.diff(grid, axis=axis))
            if diffs.size:
                lip = max(lip, float(diffs.max()) / spacing)
        lip = max(lip, grad_scale)
    else:
        lip = grad_scale
    return lip * spacing * np.sqrt(d) / 2.0


def maximize_constraint(
    c: cs.ShapeConstraint,
    fm: ft.FeatureMap,
    w: np.ndarray,
    opts: LowerLevelOptions | None = None,
) -> LowerLevelResult:
    """Approximately globally maximize x -> g(w, x) over the unit cube."""
    return maximize_constraint_multi(c, fm, np.asarray(w, dtype=float), opts)[0]
