"""Adaptive feasible-point solver for shape-constrained ridge regression.

The training problem has finitely many weights but a constraint for every
point of the input cube.  The adaptive mode runs a simultaneous bounding
scheme on a growing discretization:

* lower step - solve the QP with each constraint enforced on its current
  point set T_i; its objective F_L can only grow as the sets grow and is a
  lower bound on the true optimum;
* restricted step - solve the same QP with every constraint right-hand side
  tightened by eps, so the solution keeps a safety margin between
  discretization points;
* lower level - globally maximize each constraint at both solutions; the
  restricted solution is accepted as a feasible incumbent when every
  maximum is at most feas_tol, and violating maximizers are appended to the
  T_i otherwise;
* the tightening eps is shrunk geometrically whenever it blocks progress
  (restricted QP infeasible, restricted solution infeasible off-grid, or the
  incumbent is feasible but the bound gap still exceeds the target).

Termination at gap F_U - F_L <= delta returns a certified
delta-suboptimal, feasible point; the only assumption is that some weight
vector satisfies all constraints strictly.

Grid mode enforces the constraints on a fixed tensor grid only (no
feasibility guarantee between grid points); the grid QP is solved exactly
via constraint generation so grids of ~10^6 points per constraint stay
tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import qmc

from . import constraints as cs
from . import features as ft
from . import qp
from .errors import ConvergenceFailure, InfeasibleProblem, NotStrictlyFeasible
from .global_opt import (
    LowerLevelOptions,
    LowerLevelResult,
    _scan_basis,
    maximize_constraint_multi,
)

DEFAULT_BOX_HALFWIDTH = 1e5


@dataclass(frozen=True)
class SipProblem:
    """Dataset + feature map + constraint set + ridge weight + parameter box."""

    x: np.ndarray  # (n, d) inputs inside the unit cube
    y: np.ndarray  # (n,) targets
    feature_map: ft.FeatureMap
    constraints: tuple[cs.ShapeConstraint, ...] = ()
    lam: float = 1e-4
    box_lo: np.ndarray | None = None
    box_hi: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape[0] != y.shape[0]:
            raise ValueError("input and target counts differ")
        if x.shape[0] < 1:
            raise ValueError("dataset must contain at least one point")
        if x.shape[1] != self.feature_map.input_dim:
            raise ValueError("input dimension does not match the feature map")
        if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
            raise ValueError("training inputs must lie in the unit cube; rescale first")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        m = self.feature_map.dimension
        lo = self.box_lo if self.box_lo is not None else np.full(m, -DEFAULT_BOX_HALFWIDTH)
        hi = self.box_hi if self.box_hi is not None else np.full(m, DEFAULT_BOX_HALFWIDTH)
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        if lo.shape[0] != m or hi.shape[0] != m:
            raise ValueError("parameter box must match the feature-map dimension")
        for c in self.constraints:
            c.check_dimension(x.shape[1])
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class SolveOptions:
    """Adaptive-scheme knobs; all defaults are recorded in the report."""

    eps0: float = 1e-2  # initial restriction subtracted from constraint rows
    shrink: float = 2.0  # geometric factor for the restriction schedule
    min_eps: float = 1e-12  # below this the problem is declared not strictly feasible
    feas_tol: float = 1e-9  # lower-level value accepted as feasible
    max_outer: int = 200
    seed: int = 0
    lower_level: LowerLevelOptions = field(default_factory=LowerLevelOptions)
    qp_tol: float | None = None
    qp_max_iter: int = 50000

    def describe(self) -> dict:
        doc = asdict(self)
        doc["lower_level"] = asdict(self.lower_level)
        return doc


@dataclass
class SolveReport:
    """Outcome of one solve: weights, certified bounds, and diagnostics."""

    w: np.ndarray
    lower_bound: float
    upper_bound: float
    gap: float
    iterations: int
    discretization_sizes: tuple[int, ...]
    epsilon_final: float
    feasibility_certificates: tuple[LowerLevelResult, ...]
    mode: str  # "adaptive" | "grid"
    lower_history: tuple[float, ...] = ()
    upper_history: tuple[float, ...] = ()
    options: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.upper_bound if math.isfinite(self.upper_bound) else self.lower_bound

    def to_doc(self) -> dict:
        return {
            "format": "shape-solve-report",
            "version": 1,
            "mode": self.mode,
            "weights": [float(v) for v in self.w],
            "lower_bound": self.lower_bound,
            "upper_bound": None if math.isinf(self.upper_bound) else self.upper_bound,
            "gap": None if math.isinf(self.gap) else self.gap,
            "iterations": self.iterations,
            "discretization_sizes": list(self.discretization_sizes),
            "epsilon_final": self.epsilon_final,
            "certificates": [
                {
                    "x_star": [float(v) for v in r.x_star],
                    "value": r.value,
                    "certified_gap": r.certified_gap,
                }
                for r in self.feasibility_certificates
            ],
            "options": self.options,
        }


def _initial_points(d: int, seed: int) -> np.ndarray:
    """Cube center plus all corners (or 64 low-discrepancy points when 2^d > 64)."""
    center = np.full((1, d), 0.5)
    if 2**d <= 64:
        corners = np.array(
            [[(i >> j) & 1 for j in range(d)] for i in range(2**d)], dtype=float
        )
        return np.vstack([center, corners])
    sampler = qmc.Sobol(d, scramble=True, seed=seed)
    return np.vstack([center, sampler.random_base2(6)])


class _WorkingRows:
    """Flat, append-only working discretization.

    Row indices stay stable as points are added, so previous active sets can
    warm-start the next QP directly.
    """

    def __init__(self, problem: SipProblem):
        self.problem = problem
        m = problem.feature_map.dimension
        self.rows_a = np.zeros((0, m))
        self.rows_b = np.zeros(0)
        self.owner = np.zeros(0, dtype=int)
        self.points: list[list[np.ndarray]] = [[] for _ in problem.constraints]
        self._keys: list[set] = [set() for _ in problem.constraints]

    def add(self, i: int, pts: np.ndarray) -> int:
        """Append discretization points for constraint i (deduplicated)."""
        fresh = []
        for p in np.atleast_2d(pts):
            key = tuple(np.round(p, 12))
            if key not in self._keys[i]:
                self._keys[i].add(key)
                fresh.append(p)
        if not fresh:
            return 0
        batch = np.asarray(fresh)
        a, b = cs.linearize_batch(
            self.problem.constraints[i], self.problem.feature_map, batch
        )
        self.points[i].extend(batch)
        self.rows_a = np.vstack([self.rows_a, a])
        self.rows_b = np.concatenate([self.rows_b, np.full(len(fresh), b)])
        self.owner = np.concatenate([self.owner, np.full(len(fresh), i, dtype=int)])
        return len(fresh)

    @property
    def n_rows(self) -> int:
        return self.rows_a.shape[0]

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.points)

    def instance(self, eps: float) -> qp.QpInstance:
        return qp.QpInstance(
            phi=np.zeros((0, 0)),  # replaced by the caller
            y=np.zeros(0),
            lam=1.0,
            rows_a=self.rows_a,
            rows_b=self.rows_b - eps,
            lo=np.zeros(0),
            hi=np.zeros(0),
        )


def _remap_active(active: tuple[int, ...], old_n_user: int, new_n_user: int) -> tuple[int, ...]:
    """Keep user-row indices, shift box-row indices after rows were appended."""
    shift = new_n_user - old_n_user
    return tuple(i if i < old_n_user else i + shift for i in active)


class _QpDriver:
    """Shared factorization + warm starts for the working QPs of one solve."""

    def __init__(self, problem: SipProblem, opts: SolveOptions, phi: np.ndarray):
        self.problem = problem
        self.opts = opts
        self.phi = phi
        self.kernel = qp.RidgeKernel(phi, problem.y, problem.lam)
        self._warm: dict[str, tuple[tuple[int, ...], int]] = {}

    def solve(self, rows: _WorkingRows, eps: float, tag: str) -> qp.QpSolution:
        inst = qp.QpInstance(
            phi=self.phi,
            y=self.problem.y,
            lam=self.problem.lam,
            rows_a=rows.rows_a,
            rows_b=rows.rows_b - eps,
            lo=self.problem.box_lo,
            hi=self.problem.box_hi,
        )
        warm, old_n = self._warm.get(tag, ((), rows.n_rows))
        sol = qp.solve_qp(
            inst,
            tol=self.opts.qp_tol,
            feas_tol=self.opts.feas_tol,
            max_iter=self.opts.qp_max_iter,
            kernel=self.kernel,
            warm_active=_remap_active(warm, old_n, rows.n_rows),
        )
        if sol.status == "optimal":
            self._warm[tag] = (sol.active, rows.n_rows)
        return sol


def _conflict_indices(sol: qp.QpSolution, owner: np.ndarray) -> tuple[int, ...]:
    involved = {int(owner[i]) for i in sol.active if i < sol.n_user_rows}
    return tuple(sorted(involved))


def solve_adaptive(
    problem: SipProblem, delta: float, opts: SolveOptions | None = None
) -> SolveReport:
    """Solve to a certified optimality gap of at most ``delta``.

    The returned weights satisfy every constraint at every cube point up to
    ``opts.feas_tol`` (lower-level certificates are included in the report).
    Raises NotStrictlyFeasible when no strictly feasible weights exist and
    ConvergenceFailure (carrying the best incumbent, if any) at the
    iteration cap.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    opts = opts or SolveOptions()
    fm = problem.feature_map
    phi = ft.design_matrix(fm, problem.x)
    driver = _QpDriver(problem, opts, phi)
    rows = _WorkingRows(problem)
    init = _initial_points(problem.d, opts.seed)
    for i in range(len(problem.constraints)):
        rows.add(i, init)
    scan_basis = _scan_basis(fm, opts.lower_level) if problem.constraints else None

    eps = opts.eps0
    best_obj = math.inf
    best_w: np.ndarray | None = None
    best_certs: tuple[LowerLevelResult, ...] = ()
    lower_hist: list[float] = []
    upper_hist: list[float] = []
    f_lower = -math.inf

    for iteration in range(1, opts.max_outer + 1):
        # lower step: plain discretized QP -> valid lower bound
        sol_l = driver.solve(rows, 0.0, "lower")
        if sol_l.status == "infeasible":
            raise NotStrictlyFeasible(
                "discretized problem is infeasible; the constraint set admits no model",
                constraint_indices=_conflict_indices(sol_l, rows.owner),
                detail=sol_l.certificate,
            )
        f_lower = sol_l.objective

        # restricted step: tightened rows give the candidate feasible point
        while True:
            sol_r = driver.solve(rows, eps, "restricted")
            if sol_r.status != "infeasible":
                break
            eps /= opts.shrink
            if eps < opts.min_eps:
                raise NotStrictlyFeasible(
                    "restricted problem stayed infeasible down to the minimal "
                    "restriction; the problem is not strictly feasible",
                    constraint_indices=_conflict_indices(sol_r, rows.owner),
                    detail=sol_r.certificate,
                )

        # lower level: check both candidates against every constraint
        restricted_feasible = True
        certs_r: list[LowerLevelResult] = []
        for i, c in enumerate(problem.constraints):
            res_l, res_r = maximize_constraint_multi(
                c, fm, np.stack([sol_l.w, sol_r.w], axis=1),
                opts=opts.lower_level, basis_matrix=scan_basis,
            )
            certs_r.append(res_r)
            for res in (res_l, res_r):
                if res.value > opts.feas_tol:
                    viol = res.candidate_values > opts.feas_tol
                    rows.add(i, res.candidate_points[viol])
                    rows.add(i, res.x_star[None, :])
            if res_r.value > opts.feas_tol:
                restricted_feasible = False

        if restricted_feasible:
            obj_r = problem_objective(problem, sol_r.w, phi)
            if obj_r < best_obj:
                best_obj, best_w, best_certs = obj_r, sol_r.w, tuple(certs_r)

        lower_hist.append(f_lower)
        upper_hist.append(best_obj)

        if best_w is not None and best_obj - f_lower <= delta:
            return SolveReport(
                w=best_w,
                lower_bound=f_lower,
                upper_bound=best_obj,
                gap=best_obj - f_lower,
                iterations=iteration,
                discretization_sizes=rows.sizes(),
                epsilon_final=eps,
                feasibility_certificates=best_certs,
                mode="adaptive",
                lower_history=tuple(lower_hist),
                upper_history=tuple(upper_hist),
                options=describe_options(opts, delta=delta),
            )

        if restricted_feasible and best_obj - f_lower > delta:
            # a feasible restricted point that is still not delta-optimal:
            # only a smaller restriction can close the remaining gap, and the
            # margin it provided is now encoded in the accumulated cuts.
            # Infeasible rounds, by contrast, keep eps: they add cuts, and
            # shrinking the safety margin there would make the next
            # candidate less reliable between discretization points.
            eps /= opts.shrink

    partial = None
    if best_w is not None:
        partial = SolveReport(
            w=best_w, lower_bound=f_lower, upper_bound=best_obj,
            gap=best_obj - f_lower, iterations=opts.max_outer,
            discretization_sizes=rows.sizes(), epsilon_final=eps,
            feasibility_certificates=best_certs, mode="adaptive",
            lower_history=tuple(lower_hist), upper_history=tuple(upper_hist),
            options=describe_options(opts, delta=delta),
        )
    raise ConvergenceFailure(
        f"no certified solution within {opts.max_outer} iterations "
        f"(best gap {best_obj - f_lower:.3e})",
        report=partial,
    )


def problem_objective(problem: SipProblem, w: np.ndarray, phi: np.ndarray | None = None) -> float:
    if phi is None:
        phi = ft.design_matrix(problem.feature_map, problem.x)
    r = phi @ w - problem.y
    return float(r @ r + problem.lam * (w @ w))


def describe_options(opts: SolveOptions, **extra) -> dict:
    doc = opts.describe()
    doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# grid mode

GRID_ROW_CAP = 1_000_000


def _grid_points(d: int, per_dim: int) -> np.ndarray:
    axes = [np.linspace(0.0, 1.0, per_dim)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    if pts.shape[0] > GRID_ROW_CAP:
        keep = np.unique(np.round(np.linspace(0, pts.shape[0] - 1, GRID_ROW_CAP)).astype(int))
        pts = pts[keep]
    return pts


def solve_grid(
    problem: SipProblem, grid_points_per_dim: int, opts: SolveOptions | None = None
) -> SolveReport:
    """Enforce every constraint on a fixed tensor grid only.

    The grid QP is solved exactly by constraint generation: rows are added at
    the currently most-violated grid points until the whole grid is satisfied.
    Feasibility between grid points is NOT guaranteed; the report's
    certificates record the true (off-grid) constraint maxima for audit, and
    the gap is left uncertified.
    """
    if grid_points_per_dim < 2:
        raise ValueError("grid_points_per_dim must be at least 2")
    opts = opts or SolveOptions()
    fm = problem.feature_map
    phi = ft.design_matrix(fm, problem.x)
    driver = _QpDriver(problem, opts, phi)
    pts = _grid_points(problem.d, grid_points_per_dim)
    grid_basis = ft.design_matrix(fm, pts)

    # start from an empty working set so every enforced row is a true grid
    # point; constraint generation then reproduces the full-grid QP exactly
    rows = _WorkingRows(problem)

    # effective coefficient vectors of all constraints, so each round scans
    # the whole grid with a single matrix product
    n_c = len(problem.constraints)
    coef = np.zeros((fm.dimension, n_c))
    offsets = np.zeros(n_c)

    iteration = 0
    batch_add = 20
    while True:
        iteration += 1
        sol = driver.solve(rows, 0.0, "grid")
        if sol.status == "infeasible":
            raise InfeasibleProblem(
                "grid-discretized problem is infeasible",
                constraint_indices=_conflict_indices(sol, rows.owner),
                detail=sol.certificate,
            )
        any_new = False
        if n_c:
            for i, c in enumerate(problem.constraints):
                v, b = cs.constraint_coefficients(c, fm, sol.w)
                coef[:, i], offsets[i] = v, b
            all_vals = grid_basis @ coef - offsets  # (n_grid, n_c)
            for i in range(n_c):
                vals = all_vals[:, i]
                order = np.argsort(-vals, kind="stable")[:batch_add]
                violating = order[vals[order] > opts.feas_tol]
                if violating.size:
                    added = rows.add(i, pts[violating])
                    any_new = any_new or added > 0
        if not any_new:
            break
        if iteration > opts.max_outer:
            raise ConvergenceFailure(
                f"grid constraint generation did not settle within {opts.max_outer} rounds"
            )

    certs = tuple(
        maximize_constraint_multi(c, fm, sol.w, opts=opts.lower_level)[0]
        for c in problem.constraints
    )
    n_grid = pts.shape[0]
    return SolveReport(
        w=sol.w,
        lower_bound=sol.objective,
        upper_bound=math.inf,
        gap=math.inf,
        iterations=iteration,
        discretization_sizes=tuple(n_grid for _ in problem.constraints),
        epsilon_final=0.0,
        feasibility_certificates=certs,
        mode="grid",
        options=describe_options(opts, grid_points_per_dim=grid_points_per_dim),
    )
