"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test prints a single PASS/FAIL line (run pytest with -s to see them
inline) and enforces its runtime budget.
"""

import time

import numpy as np
import pytest

from shapereg import constraints as cs
from shapereg import evaluation as ev
from shapereg import features as ft
from shapereg import global_opt as go
from shapereg import model as md
from shapereg import qp
from shapereg import sip
from shapereg import toy

from conftest import brute_force_qp, dense_grid_max
from test_qp import random_instance
from test_sip import analytic_problem, bump_problem

K = cs.ConstraintKind


def _criterion(name: str, ok: bool, detail: str, elapsed: float, budget: float):
    within = elapsed <= budget
    status = "PASS" if (ok and within) else "FAIL"
    print(f"[{name}] {status} - {detail} ({elapsed:.1f}s of {budget:.0f}s budget)")
    assert ok, f"{name}: {detail}"
    assert within, f"{name}: runtime {elapsed:.1f}s exceeded budget {budget:.0f}s"


def test_a1_feature_map_dimensions():
    t0 = time.perf_counter()
    m1 = ft.enumerate_multi_indices((4, 1, 3, 4)).dimension
    m2 = ft.enumerate_multi_indices((1, 5, 2, 2, 2)).dimension
    elapsed = time.perf_counter() - t0
    _criterion("A1", m1 == 54 and m2 == 136, f"m(4,1,3,4)={m1}, m(1,5,2,2,2)={m2}", elapsed, 1.0)


def test_a2_derivatives_match_finite_differences():
    rng = np.random.default_rng(42)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 6))
        degrees = tuple(int(g) for g in rng.integers(1, 6, size=d))
        fm = ft.enumerate_multi_indices(degrees)
        x = rng.uniform(0.05, 0.95, size=d)
        axis = int(rng.integers(d))
        h = 1e-6
        e = np.zeros(d)
        e[axis] = h

        d1 = ft.eval_derivative(fm, x, axis, 1)
        fd1 = (ft.eval_features(fm, x + e) - ft.eval_features(fm, x - e)) / (2 * h)
        d2 = ft.eval_derivative(fm, x, axis, 2)
        fd2 = (ft.eval_derivative(fm, x + e, axis, 1) - ft.eval_derivative(fm, x - e, axis, 1)) / (2 * h)
        for got, ref in ((d1, fd1), (d2, fd2)):
            scale = np.maximum(np.abs(got), 1e-2)
            worst = max(worst, float(np.max(np.abs(got - ref) / scale)))
    elapsed = time.perf_counter() - t0
    _criterion("A2", worst <= 1e-6, f"worst relative derivative error {worst:.2e}", elapsed, 5.0)


def test_a3_qp_matches_active_set_enumeration():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst_w, worst_obj, n_feasible = 0.0, 0.0, 0
    for _ in range(200):
        inst = random_instance(rng)
        sol = qp.solve_qp(inst)
        oracle = brute_force_qp(
            inst.phi, inst.y, inst.lam, inst.rows_a, inst.rows_b, inst.lo, inst.hi
        )
        if sol.status == "infeasible":
            assert oracle is None, "solver declared infeasible but the oracle found a point"
            continue
        assert oracle is not None, "oracle found no point but the solver returned one"
        n_feasible += 1
        worst_w = max(worst_w, float(np.max(np.abs(sol.w - oracle[0]))))
        worst_obj = max(worst_obj, abs(sol.objective - oracle[1]))
    elapsed = time.perf_counter() - t0
    _criterion(
        "A3",
        worst_w <= 1e-6 and worst_obj <= 1e-6 and n_feasible >= 100,
        f"{n_feasible} feasible instances, worst |dw|={worst_w:.2e}, |dobj|={worst_obj:.2e}",
        elapsed,
        30.0,
    )


def test_a4_lower_level_matches_dense_grid():
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    worst = -np.inf
    for _ in range(100):
        d = int(rng.integers(1, 3))
        degrees = tuple(int(g) for g in rng.integers(1, 5, size=d))
        fm = ft.enumerate_multi_indices(degrees)
        kinds = [K.UPPER_BOUND, K.LOWER_BOUND, K.MONOTONE_INCREASING,
                 K.MONOTONE_DECREASING, K.CONVEX, K.CONCAVE]
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind in (K.UPPER_BOUND, K.LOWER_BOUND):
            c = cs.ShapeConstraint(kind, level=float(rng.normal()))
        else:
            c = cs.ShapeConstraint(kind, axis=int(rng.integers(d)))
        w = rng.normal(size=fm.dimension)
        res = go.maximize_constraint(c, fm, w)
        oracle = dense_grid_max(c, fm, w, 1_000_000 if d == 1 else 1000)
        worst = max(worst, oracle - res.value)
    elapsed = time.perf_counter() - t0
    _criterion("A4", worst <= 1e-4, f"worst shortfall vs dense grid {worst:.2e}", elapsed, 60.0)


def test_a5_sip_certification_on_analytic_problem():
    t0 = time.perf_counter()
    rep = sip.solve_adaptive(analytic_problem(), 1e-6)
    elapsed = time.perf_counter() - t0
    cert = max(r.value for r in rep.feasibility_certificates)
    ok = (
        abs(rep.upper_bound - 1.0) <= 1e-6
        and -1e-12 <= rep.gap <= 1e-6
        and cert <= 1e-9
    )
    _criterion(
        "A5", ok,
        f"objective {rep.upper_bound:.8f} (true 1), gap {rep.gap:.2e}, certificate {cert:.2e}",
        elapsed, 5.0,
    )


def test_a6_toy_experiment():
    t0 = time.perf_counter()
    fm = ft.enumerate_multi_indices(toy.TOY_DEGREES)
    constraints = toy.toy_constraints()
    adaptive_viol, ridge_viol = [], []
    adaptive_gen, ridge_gen = [], []
    for rep in range(10):
        x, y = toy.toy_sample(toy.ToySpec(sigma=0.03408, n_train=30, seed=rep))
        problem = sip.SipProblem(x=x, y=y, feature_map=fm, constraints=constraints, lam=0.01)

        report = sip.solve_adaptive(problem, 1e-5)
        model_a = md.TrainedModel(feature_map=fm, w=report.w,
                                  input_ranges=md.unit_ranges(5), constraint_set=constraints)
        adaptive_viol.append(
            ev.audit_violations(model_a, constraints, seed=100 + rep).total_violated
        )
        adaptive_gen.append(ev.generalization_error(model_a, toy.toy_eval, seed=500 + rep))

        grid_problem = sip.SipProblem(x=x, y=y, feature_map=fm,
                                      constraints=constraints, lam=0.05)
        sip.solve_grid(grid_problem, 20)

        w_r = qp.solve_ridge(ft.design_matrix(fm, x), y, 0.01)
        model_r = md.TrainedModel(feature_map=fm, w=w_r, input_ranges=md.unit_ranges(5))
        ridge_viol.append(
            ev.audit_violations(model_r, constraints, seed=100 + rep).total_violated
        )
        ridge_gen.append(ev.generalization_error(model_r, toy.toy_eval, seed=500 + rep))

    elapsed = time.perf_counter() - t0
    wins = sum(a < r for a, r in zip(adaptive_gen, ridge_gen))
    med_a, med_r = float(np.median(adaptive_gen)), float(np.median(ridge_gen))
    ridge_hits = sum(v >= 1 for v in ridge_viol)
    ok_i = all(v == 0 for v in adaptive_viol)
    ok_ii = wins >= 9 and med_a <= 0.75 * med_r
    ok_iii = ridge_hits >= 8
    _criterion(
        "A6",
        ok_i and ok_ii and ok_iii,
        (
            f"(i) adaptive violations {adaptive_viol}; "
            f"(ii) wins {wins}/10, medians {med_a:.4f} vs {med_r:.4f} "
            f"(ratio {med_a / med_r:.2f}); (iii) ridge violated in {ridge_hits}/10"
        ),
        elapsed,
        1800.0,
    )


def test_a7_grid_mode_off_grid_violation():
    t0 = time.perf_counter()
    problem = bump_problem()
    rep = sip.solve_grid(problem, 20)
    grid = np.linspace(0, 1, 20)[:, None]
    on_grid_max = float(
        cs.constraint_values(problem.constraints[0], problem.feature_map, rep.w, grid).max()
    )
    off_grid = rep.feasibility_certificates[0].value
    elapsed = time.perf_counter() - t0
    _criterion(
        "A7",
        on_grid_max <= 1e-9 and off_grid > 1e-9,
        f"grid rows max {on_grid_max:.2e}, certified off-grid violation {off_grid:.2e}",
        elapsed,
        60.0,
    )


def test_a8_protocol_plumbing():
    t0 = time.perf_counter()
    fm = ft.enumerate_multi_indices(toy.TOY_DEGREES)
    constraints = toy.toy_constraints()
    x, y = toy.toy_sample(toy.ToySpec(seed=0))
    problem = sip.SipProblem(x=x, y=y, feature_map=fm, constraints=constraints, lam=0.01)

    cv_adaptive = ev.cross_validate(
        problem, k=10, spec=ev.SolverSpec(mode="adaptive", delta=1e-5), seed=1
    )
    cv_ridge = ev.cross_validate(problem, k=10, spec=ev.SolverSpec(mode="ridge"), seed=1)
    table = ev.comparison_table([("adaptive", cv_adaptive), ("ridge", cv_ridge)])
    ok_table = (
        "CV Test Error" in table and "Training Time" in table
        and "Shape Violations" in table and "±" in table and "out of 5" in table
        and len(cv_adaptive.fold_rmses) == 10
    )

    model = md.TrainedModel(feature_map=fm,
                            w=qp.solve_ridge(ft.design_matrix(fm, x), y, 0.01),
                            input_ranges=md.unit_ranges(5))
    audit_1 = ev.audit_violations(model, constraints, seed=77)
    audit_2 = ev.audit_violations(model, constraints, seed=77)
    ok_bytes = audit_1.to_json().encode() == audit_2.to_json().encode()
    elapsed = time.perf_counter() - t0
    _criterion(
        "A8",
        ok_table and ok_bytes,
        f"table rendered ({len(table.splitlines())} lines), audits byte-identical={ok_bytes}",
        elapsed,
        600.0,
    )
    print(table)


def test_a9_relaxation_monotonicity():
    t0 = time.perf_counter()
    fm = ft.enumerate_multi_indices(toy.TOY_DEGREES)
    x, y = toy.toy_sample(toy.ToySpec(seed=2))
    delta = 1e-5
    strict = toy.toy_constraints()
    relaxed = tuple(cs.relaxed(c, 0.01) for c in strict)
    rep_strict = sip.solve_adaptive(
        sip.SipProblem(x=x, y=y, feature_map=fm, constraints=strict, lam=0.01), delta
    )
    rep_relaxed = sip.solve_adaptive(
        sip.SipProblem(x=x, y=y, feature_map=fm, constraints=relaxed, lam=0.01), delta
    )
    elapsed = time.perf_counter() - t0
    # certified: the relaxed optimum cannot exceed the strict one
    certified = rep_relaxed.lower_bound <= rep_strict.upper_bound + 1e-12
    returned = rep_relaxed.upper_bound <= rep_strict.upper_bound + delta
    _criterion(
        "A9",
        certified and returned,
        (
            f"strict objective {rep_strict.upper_bound:.6f}, "
            f"relaxed objective {rep_relaxed.upper_bound:.6f} "
            f"(certified interval check: {rep_relaxed.lower_bound:.6f} <= {rep_strict.upper_bound:.6f})"
        ),
        elapsed,
        600.0,
    )
