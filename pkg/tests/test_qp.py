import numpy as np
import pytest

from shapereg import qp

from conftest import brute_force_qp


def random_instance(rng, force_rows=None):
    m = int(rng.integers(1, 4))
    n = int(rng.integers(1, 7))
    phi = rng.normal(size=(n, m))
    y = rng.normal(size=n)
    lam = float(10 ** rng.uniform(-3, 0))
    k = int(rng.integers(0, 5)) if force_rows is None else force_rows
    rows_a = rng.normal(size=(k, m))
    rows_b = rng.normal(size=k)
    half = float(rng.choice([1.0, 5.0, 1e3]))
    lo, hi = np.full(m, -half), np.full(m, half)
    return qp.QpInstance(phi=phi, y=y, lam=lam, rows_a=rows_a, rows_b=rows_b, lo=lo, hi=hi)


class TestRidge:
    def test_identity_design(self):
        w = qp.solve_ridge(np.eye(2), np.array([2.0, 4.0]), 1.0)
        np.testing.assert_allclose(w, [1.0, 2.0], rtol=1e-12)

    def test_large_lambda_shrinks_weights(self):
        rng = np.random.default_rng(0)
        phi = rng.normal(size=(10, 3))
        y = rng.normal(size=10)
        norms = [
            float(np.linalg.norm(qp.solve_ridge(phi, y, lam)))
            for lam in (1e-2, 1.0, 1e2, 1e4)
        ]
        assert all(a > b for a, b in zip(norms, norms[1:]))
        assert norms[-1] < 1e-3

    def test_matches_normal_equations(self, rng):
        phi = rng.normal(size=(5, 3))
        y = rng.normal(size=5)
        lam = 0.37
        w = qp.solve_ridge(phi, y, lam)
        direct = np.linalg.solve(phi.T @ phi + lam * np.eye(3), phi.T @ y)
        np.testing.assert_allclose(w, direct, rtol=1e-10)
        residual = (phi.T @ phi + lam * np.eye(3)) @ w - phi.T @ y
        assert np.linalg.norm(residual) <= 1e-10 * (1 + np.linalg.norm(phi.T @ y))

    def test_lambda_must_be_positive(self):
        with pytest.raises(ValueError):
            qp.solve_ridge(np.eye(2), np.zeros(2), 0.0)


class TestSolveQp:
    def test_unconstrained_single_weight(self):
        inst = qp.make_instance([[1.0]], [1.0], 1e-9, box=(-10, 10))
        sol = qp.solve_qp(inst)
        assert sol.status == "optimal"
        assert sol.w[0] == pytest.approx(1.0, abs=1e-6)
        assert sol.objective == pytest.approx(0.0, abs=1e-8)

    def test_single_active_row(self):
        inst = qp.make_instance(
            [[1.0]], [1.0], 1e-9, rows=[(np.array([1.0]), 0.5)], box=(-10, 10)
        )
        sol = qp.solve_qp(inst)
        assert sol.w[0] == pytest.approx(0.5, abs=1e-9)
        assert 0 in sol.active

    def test_matches_brute_force_oracle(self, rng):
        n_optimal = 0
        for _ in range(60):
            inst = random_instance(rng)
            sol = qp.solve_qp(inst)
            oracle = brute_force_qp(
                inst.phi, inst.y, inst.lam, inst.rows_a, inst.rows_b, inst.lo, inst.hi
            )
            if sol.status == "infeasible":
                assert oracle is None
                continue
            n_optimal += 1
            assert oracle is not None
            np.testing.assert_allclose(sol.w, oracle[0], rtol=1e-6, atol=1e-6)
            assert sol.objective == pytest.approx(oracle[1], rel=1e-6, abs=1e-6)
        assert n_optimal >= 30  # the generator must exercise the optimal path

    def test_deterministic_repeat(self, rng):
        inst = random_instance(rng, force_rows=3)
        s1 = qp.solve_qp(inst)
        s2 = qp.solve_qp(inst)
        if s1.status == "optimal":
            assert np.max(np.abs(s1.w - s2.w)) <= 1e-8

    def test_adding_row_never_improves_objective(self, rng):
        for _ in range(10):
            inst = random_instance(rng, force_rows=0)
            base = qp.solve_qp(inst)
            a = rng.normal(size=inst.m)
            b = float(a @ base.w) - abs(rng.normal())  # cuts off the optimum
            harder = qp.QpInstance(
                phi=inst.phi, y=inst.y, lam=inst.lam,
                rows_a=a[None, :], rows_b=np.array([b]), lo=inst.lo, hi=inst.hi,
            )
            sol = qp.solve_qp(harder)
            if sol.status == "optimal":
                assert sol.objective >= base.objective - 1e-10

    def test_kkt_residual_recomputed_matches(self, rng):
        for _ in range(10):
            inst = random_instance(rng)
            sol = qp.solve_qp(inst)
            if sol.status != "optimal":
                continue
            recomputed = qp.kkt_residual(inst, sol.w, sol.active, sol.multipliers)
            assert recomputed == pytest.approx(sol.kkt_residual, rel=1e-9, abs=1e-12)
            assert recomputed <= 1e-8 * (1 + np.max(np.abs(inst.phi.T @ inst.y)))

    def test_no_rows_equals_ridge(self, rng):
        phi = rng.normal(size=(6, 3))
        y = rng.normal(size=6)
        inst = qp.make_instance(phi, y, 0.05, box=(-1e5, 1e5))
        sol = qp.solve_qp(inst)
        np.testing.assert_allclose(sol.w, qp.solve_ridge(phi, y, 0.05), atol=1e-8)

    def test_contradictory_rows_detected(self):
        # w0 >= 1 and w0 <= 0 cannot hold together
        inst = qp.make_instance(
            [[1.0]], [0.5], 1e-3,
            rows=[(np.array([-1.0]), -1.0), (np.array([1.0]), 0.0)],
            box=(-10, 10),
        )
        sol = qp.solve_qp(inst)
        assert sol.status == "infeasible"
        assert set(sol.active) >= {0, 1}

    def test_zero_normal_rows(self):
        inst = qp.make_instance(
            [[1.0]], [1.0], 1e-3,
            rows=[(np.array([0.0]), 1.0)],  # vacuous
            box=(-10, 10),
        )
        assert qp.solve_qp(inst).status == "optimal"
        inst2 = qp.make_instance(
            [[1.0]], [1.0], 1e-3,
            rows=[(np.array([0.0]), -1.0)],  # impossible
            box=(-10, 10),
        )
        assert qp.solve_qp(inst2).status == "infeasible"

    def test_degenerate_box_interval(self):
        # pinning one weight to an exact value via a zero-width box interval
        inst = qp.QpInstance(
            phi=np.array([[1.0, 1.0]]), y=np.array([2.0]), lam=1e-9,
            rows_a=np.zeros((0, 2)), rows_b=np.zeros(0),
            lo=np.array([0.0, -1e5]), hi=np.array([0.0, 1e5]),
        )
        sol = qp.solve_qp(inst)
        assert sol.status == "optimal"
        assert sol.w[0] == pytest.approx(0.0, abs=1e-9)
        assert sol.w[1] == pytest.approx(2.0, abs=1e-6)

    def test_warm_start_agrees_with_cold(self, rng):
        for _ in range(10):
            inst = random_instance(rng, force_rows=4)
            cold = qp.solve_qp(inst)
            if cold.status != "optimal":
                continue
            kernel = qp.RidgeKernel(inst.phi, inst.y, inst.lam)
            warm = qp.solve_qp(inst, kernel=kernel, warm_active=cold.active)
            np.testing.assert_allclose(warm.w, cold.w, atol=1e-8)
            # also from a wrong-but-valid seed
            warm2 = qp.solve_qp(inst, kernel=kernel, warm_active=(0,))
            np.testing.assert_allclose(warm2.w, cold.w, atol=1e-7)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            qp.QpInstance(
                phi=np.eye(2), y=np.zeros(3), lam=1.0,
                rows_a=np.zeros((0, 2)), rows_b=np.zeros(0),
                lo=np.zeros(2), hi=np.ones(2),
            )

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError):
            qp.QpInstance(
                phi=np.eye(2), y=np.zeros(2), lam=1.0,
                rows_a=np.zeros((0, 2)), rows_b=np.zeros(0),
                lo=np.array([1.0, 0.0]), hi=np.array([0.0, 1.0]),
            )
