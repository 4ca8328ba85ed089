"""Measurement protocol: violation audit, k-fold cross-validation, generalization.

The audit samples random anchor points in the cube and, for every
axis-bound constraint, checks the constraint value along a line of
equidistant points through each anchor; bound constraints are checked at the
anchors directly.  A constraint counts as violated when any sampled value
exceeds the audit tolerance, which is deliberately looser than the solver's
feasibility tolerance so certified models always pass.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import constraints as cs
from . import features as ft
from . import qp
from . import sip
from .global_opt import LowerLevelOptions
from .model import TrainedModel, unit_ranges

AUDIT_TOL = 1e-7
AUDIT_ANCHORS = 10_000
AUDIT_LINE_POINTS = 100


class FunctionPredictor:
    """Adapter letting the audit run against an arbitrary cube-domain function.

    Derivative-based constraints are checked with central finite differences
    of the wrapped callable (step ``fd_step``), so audit results carry an
    O(step^2) noise floor; keep the audit tolerance above it.
    """

    def __init__(self, fn, d: int, fd_step: float = 1e-4):
        self.fn = fn
        self.d = d
        self.fd_step = fd_step

    def _values(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(pts), dtype=float).reshape(-1)

    def constraint_values_cube(self, c: cs.ShapeConstraint, pts: np.ndarray) -> np.ndarray:
        h = self.fd_step
        kind = c.kind
        if kind is cs.ConstraintKind.UPPER_BOUND:
            g = self._values(pts) - c.level
        elif kind is cs.ConstraintKind.LOWER_BOUND:
            g = c.level - self._values(pts)
        else:
            step = np.zeros(self.d)
            step[c.axis] = h
            up, down = self._values(pts + step), self._values(pts - step)
            if kind is cs.ConstraintKind.MONOTONE_INCREASING:
                g = -(up - down) / (2 * h)
            elif kind is cs.ConstraintKind.MONOTONE_DECREASING:
                g = (up - down) / (2 * h)
            elif kind in (cs.ConstraintKind.CONVEX, cs.ConstraintKind.CONCAVE):
                second = (up - 2 * self._values(pts) + down) / h**2
                g = -second if kind is cs.ConstraintKind.CONVEX else second
            elif kind is cs.ConstraintKind.REBOUND:
                slope = (up - down) / (2 * h)
                g = slope + c.rebound_factor * (self._values(pts) - c.rebound_cap)
            else:
                raise ValueError(f"unknown constraint kind {kind!r}")
        return g - c.relax


def _constraint_values_cube(predictor, c: cs.ShapeConstraint, pts: np.ndarray) -> np.ndarray:
    if isinstance(predictor, TrainedModel):
        return cs.constraint_values(c, predictor.feature_map, predictor.w, pts)
    return predictor.constraint_values_cube(c, pts)


@dataclass
class ConstraintAudit:
    index: int
    violated: bool
    worst_point: np.ndarray  # cube coordinates
    worst_value: float
    violating_fraction: float


@dataclass
class ViolationReport:
    per_constraint: list[ConstraintAudit]
    total_violated: int
    tol: float
    seed: int

    def to_doc(self) -> dict:
        return {
            "format": "shape-violation-report",
            "version": 1,
            "tol": self.tol,
            "seed": self.seed,
            "total_violated": self.total_violated,
            "n_constraints": len(self.per_constraint),
            "per_constraint": [
                {
                    "index": a.index,
                    "violated": a.violated,
                    "worst_point": [float(v) for v in a.worst_point],
                    "worst_value": a.worst_value,
                    "violating_fraction": a.violating_fraction,
                }
                for a in self.per_constraint
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["index,violated,worst_value,violating_fraction,worst_point"]
        for a in self.per_constraint:
            pt = ";".join(f"{v!r}" for v in a.worst_point)
            lines.append(
                f"{a.index},{int(a.violated)},{a.worst_value!r},{a.violating_fraction!r},{pt}"
            )
        return "\n".join(lines) + "\n"


def audit_violations(
    predictor,
    constraints,
    n_anchors: int = AUDIT_ANCHORS,
    n_line: int = AUDIT_LINE_POINTS,
    seed: int = 0,
    tol: float = AUDIT_TOL,
) -> ViolationReport:
    """Sample-based shape-compliance check of a model against a constraint set.

    Anchors are shared across constraints within one call; the whole audit is
    deterministic for a fixed seed.
    """
    if isinstance(predictor, TrainedModel):
        d = predictor.input_dim
    else:
        d = predictor.d
    constraints = tuple(constraints)
    rng = np.random.default_rng(seed)
    anchors = rng.uniform(size=(n_anchors, d))
    line = np.linspace(0.0, 1.0, n_line)

    audits: list[ConstraintAudit] = []
    for idx, c in enumerate(constraints):
        c.check_dimension(d)
        if c.axis is None:
            vals = _constraint_values_cube(predictor, c, anchors)
            worst_i = int(np.argmax(vals))
            worst_pt = anchors[worst_i]
            worst_val = float(vals[worst_i])
            frac = float(np.mean(vals > tol))
        elif isinstance(predictor, TrainedModel):
            # structured sweep: same sampled points, one small matrix product
            vals = cs.axis_line_values(
                c, predictor.feature_map, predictor.w, anchors, line
            )
            a_i, l_i = np.unravel_index(int(np.argmax(vals)), vals.shape)
            worst_pt = anchors[a_i].copy()
            worst_pt[c.axis] = line[l_i]
            worst_val = float(vals[a_i, l_i])
            frac = float(np.mean(vals > tol))
        else:
            worst_val, worst_pt, n_viol, n_tot = -np.inf, anchors[0], 0, 0
            chunk = max(1, 200_000 // n_line)
            for start in range(0, n_anchors, chunk):
                block = anchors[start : start + chunk]
                pts = np.repeat(block, n_line, axis=0)
                pts[:, c.axis] = np.tile(line, block.shape[0])
                vals = _constraint_values_cube(predictor, c, pts)
                i = int(np.argmax(vals))
                if float(vals[i]) > worst_val:
                    worst_val, worst_pt = float(vals[i]), pts[i].copy()
                n_viol += int(np.sum(vals > tol))
                n_tot += vals.shape[0]
            frac = n_viol / n_tot
        audits.append(
            ConstraintAudit(
                index=idx,
                violated=bool(worst_val > tol),
                worst_point=np.asarray(worst_pt, dtype=float),
                worst_value=worst_val,
                violating_fraction=frac,
            )
        )
    return ViolationReport(
        per_constraint=audits,
        total_violated=sum(a.violated for a in audits),
        tol=tol,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class SolverSpec:
    """Which fitting route a harness run uses."""

    mode: str = "adaptive"  # "adaptive" | "grid" | "ridge"
    delta: float = 1e-4
    grid_points: int = 20
    options: sip.SolveOptions = field(default_factory=sip.SolveOptions)

    def __post_init__(self):
        if self.mode not in ("adaptive", "grid", "ridge"):
            raise ValueError(f"unknown solver mode {self.mode!r}")


def fit_weights(problem: sip.SipProblem, spec: SolverSpec):
    """Fit one problem per the spec; returns (w, report-or-None)."""
    if spec.mode == "adaptive":
        report = sip.solve_adaptive(problem, spec.delta, spec.options)
        return report.w, report
    if spec.mode == "grid":
        report = sip.solve_grid(problem, spec.grid_points, spec.options)
        return report.w, report
    phi = ft.design_matrix(problem.feature_map, problem.x)
    return qp.solve_ridge(phi, problem.y, problem.lam), None


@dataclass
class CvReport:
    fold_rmses: list[float]
    mean: float
    std: float
    mean_train_seconds: float
    mean_violations: float
    n_constraints: int
    mode: str

    def to_doc(self) -> dict:
        return {
            "format": "shape-cv-report",
            "version": 1,
            "mode": self.mode,
            "fold_rmses": self.fold_rmses,
            "mean": self.mean,
            "std": self.std,
            "mean_train_seconds": self.mean_train_seconds,
            "mean_violations": self.mean_violations,
            "n_constraints": self.n_constraints,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["fold,rmse"]
        lines += [f"{i},{v!r}" for i, v in enumerate(self.fold_rmses)]
        lines.append(f"mean,{self.mean!r}")
        lines.append(f"std,{self.std!r}")
        lines.append(f"mean_train_seconds,{self.mean_train_seconds!r}")
        lines.append(f"mean_violations,{self.mean_violations!r}")
        return "\n".join(lines) + "\n"


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffled partition of range(n) into k near-equal folds."""
    if n < k:
        raise ValueError(f"cannot split {n} points into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, k)]


def cross_validate(
    problem: sip.SipProblem,
    k: int = 10,
    spec: SolverSpec | None = None,
    seed: int = 0,
    audit_seed: int = 0,
    audit_anchors: int = AUDIT_ANCHORS,
    audit_line: int = AUDIT_LINE_POINTS,
    jobs: int = 1,
) -> CvReport:
    """k-fold protocol: per-fold fit, held-out RMSE, train time, audit count."""
    spec = spec or SolverSpec()
    folds = fold_indices(problem.n, k, seed)
    fm = problem.feature_map

    def run_fold(test_idx: np.ndarray):
        mask = np.ones(problem.n, dtype=bool)
        mask[test_idx] = False
        sub = sip.SipProblem(
            x=problem.x[mask], y=problem.y[mask],
            feature_map=fm, constraints=problem.constraints,
            lam=problem.lam, box_lo=problem.box_lo, box_hi=problem.box_hi,
        )
        t0 = time.perf_counter()
        w, _ = fit_weights(sub, spec)
        train_s = time.perf_counter() - t0
        pred = ft.design_matrix(fm, problem.x[test_idx]) @ w
        rmse = float(np.sqrt(np.mean((pred - problem.y[test_idx]) ** 2)))
        fold_model = TrainedModel(
            feature_map=fm, w=w, input_ranges=unit_ranges(problem.d),
            constraint_set=problem.constraints,
        )
        audit = audit_violations(
            fold_model, problem.constraints,
            n_anchors=audit_anchors, n_line=audit_line, seed=audit_seed,
        )
        return rmse, train_s, audit.total_violated

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_fold, folds))
    else:
        results = [run_fold(f) for f in folds]

    rmses = [r[0] for r in results]
    times = [r[1] for r in results]
    viols = [r[2] for r in results]
    return CvReport(
        fold_rmses=rmses,
        mean=float(np.mean(rmses)),
        std=float(np.std(rmses, ddof=1)) if k > 1 else 0.0,
        mean_train_seconds=float(np.mean(times)),
        mean_violations=float(np.mean(viols)),
        n_constraints=len(problem.constraints),
        mode=spec.mode,
    )


def generalization_error(model: TrainedModel, truth, n_test: int = 5000, seed: int = 0) -> float:
    """RMSE of the model against a noiseless ground-truth function.

    Test points are sampled uniformly over the model's input ranges; ``truth``
    receives original-unit points, one per row.
    """
    rng = np.random.default_rng(seed)
    lo, hi = model.input_ranges[:, 0], model.input_ranges[:, 1]
    pts = lo + rng.uniform(size=(n_test, model.input_dim)) * (hi - lo)
    truth_vals = np.asarray([truth(p) for p in pts], dtype=float)
    pred = model.predict_batch(pts)
    return float(np.sqrt(np.mean((pred - truth_vals) ** 2)))


# ---------------------------------------------------------------------------
# comparison-table rendering


def format_hms(seconds: float) -> str:
    total = int(round(seconds))
    h, rem = divmod(total, 3600)
    m, s = divmod(rem, 60)
    return f"{h:02d}:{m:02d}:{s:02d}"


def format_violations(mean_violations: float, n_constraints: int) -> str:
    if mean_violations == int(mean_violations):
        shown: str = str(int(mean_violations))
    else:
        shown = f"{mean_violations:g}"
    return f"{shown} out of {n_constraints}"


def comparison_table(rows: list[tuple[str, CvReport]]) -> str:
    """Render cross-validation results in the four-column comparison layout."""
    header = ("Model", "CV Test Error", "Training Time", "Shape Violations")
    body = [
        (
            name,
            f"{rep.mean:.4g} ± {rep.std:.4g}",
            format_hms(rep.mean_train_seconds),
            format_violations(rep.mean_violations, rep.n_constraints),
        )
        for name, rep in rows
    ]
    widths = [
        max(len(header[i]), *(len(r[i]) for r in body)) if body else len(header[i])
        for i in range(4)
    ]
    def fmt(row):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    lines = [fmt(header), "-" * (sum(widths) + 6)]
    lines.extend(fmt(r) for r in body)
    return "\n".join(lines) + "\n"
