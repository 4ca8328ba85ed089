import numpy as np
import pytest

from shapereg import constraints as cs
from shapereg import features as ft
from shapereg import global_opt as go

from conftest import dense_grid_max

K = cs.ConstraintKind


class TestMaximize:
    def test_affine_surface_maximized_at_vertex(self):
        # yhat = x^2 with a decreasing requirement gives g = 2x, maximal at 1
        fm = ft.enumerate_multi_indices((2,))
        c = cs.ShapeConstraint(K.MONOTONE_DECREASING, axis=0)
        res = go.maximize_constraint(c, fm, np.array([0.0, 0.0, 1.0]))
        assert res.value == pytest.approx(2.0, abs=1e-9)
        assert res.x_star[0] == pytest.approx(1.0, abs=1e-9)

    def test_zero_weights(self):
        fm = ft.enumerate_multi_indices((2, 2))
        c = cs.ShapeConstraint(K.MONOTONE_INCREASING, axis=0)
        res = go.maximize_constraint(c, fm, np.zeros(fm.dimension))
        assert res.value == pytest.approx(0.0, abs=1e-15)
        c2 = cs.ShapeConstraint(K.UPPER_BOUND, level=0.7)
        res2 = go.maximize_constraint(c2, fm, np.zeros(fm.dimension))
        assert res2.value == pytest.approx(-0.7, abs=1e-15)
        assert np.all(res2.x_star >= 0.0) and np.all(res2.x_star <= 1.0)

    def test_value_is_exact_at_returned_point(self, rng):
        for _ in range(10):
            degrees = tuple(int(g) for g in rng.integers(1, 4, size=2))
            fm = ft.enumerate_multi_indices(degrees)
            c = cs.ShapeConstraint(K.CONVEX, axis=0)
            w = rng.normal(size=fm.dimension)
            res = go.maximize_constraint(c, fm, w)
            direct = cs.evaluate_constraint(c, fm, w, res.x_star)
            assert res.value == pytest.approx(direct, rel=1e-12, abs=1e-12)
            assert np.all(res.x_star >= 0.0) and np.all(res.x_star <= 1.0)
            assert res.certified_gap >= 0.0

    def test_close_to_dense_grid_oracle(self, rng):
        for _ in range(15):
            d = int(rng.integers(1, 3))
            degrees = tuple(int(g) for g in rng.integers(1, 5, size=d))
            fm = ft.enumerate_multi_indices(degrees)
            kinds = [K.UPPER_BOUND, K.MONOTONE_INCREASING, K.CONVEX]
            kind = kinds[int(rng.integers(3))]
            c = (
                cs.ShapeConstraint(kind, level=float(rng.normal()))
                if kind == K.UPPER_BOUND
                else cs.ShapeConstraint(kind, axis=int(rng.integers(d)))
            )
            w = rng.normal(size=fm.dimension)
            res = go.maximize_constraint(c, fm, w)
            oracle = dense_grid_max(c, fm, w, 1000 if d == 2 else 100_000)
            assert res.value >= oracle - 1e-4

    def test_more_seeds_never_worse(self, rng):
        fm = ft.enumerate_multi_indices((4, 4))
        c = cs.ShapeConstraint(K.CONCAVE, axis=1)
        for _ in range(5):
            w = rng.normal(size=fm.dimension)
            values = [
                go.maximize_constraint(
                    c, fm, w, go.LowerLevelOptions(n_seeds=k)
                ).value
                for k in (1, 3, 10)
            ]
            assert values[0] <= values[1] + 1e-12
            assert values[1] <= values[2] + 1e-12

    def test_ascent_not_below_scan(self, rng):
        fm = ft.enumerate_multi_indices((3, 3))
        c = cs.ShapeConstraint(K.UPPER_BOUND, level=0.0)
        opts = go.LowerLevelOptions()
        pts, _, _ = go._scan_points(2, opts)
        for _ in range(5):
            w = rng.normal(size=fm.dimension)
            scan_best = float(cs.constraint_values(c, fm, w, pts).max())
            res = go.maximize_constraint(c, fm, w, opts)
            assert res.value >= scan_best - 1e-12

    def test_multi_weight_matches_single(self, rng):
        fm = ft.enumerate_multi_indices((2, 2))
        c = cs.ShapeConstraint(K.MONOTONE_INCREASING, axis=1)
        W = rng.normal(size=(fm.dimension, 3))
        multi = go.maximize_constraint_multi(c, fm, W)
        for q in range(3):
            single = go.maximize_constraint(c, fm, W[:, q])
            assert multi[q].value == pytest.approx(single.value, rel=1e-12, abs=1e-12)

    def test_weight_shape_validated(self):
        fm = ft.enumerate_multi_indices((2,))
        c = cs.ShapeConstraint(K.UPPER_BOUND, level=1.0)
        with pytest.raises(ValueError):
            go.maximize_constraint(c, fm, np.zeros(7))


class TestScanPoints:
    def test_low_dimension_uses_full_grid(self):
        opts = go.LowerLevelOptions()
        for d in (1, 2, 3):
            pts, spacing, is_grid = go._scan_points(d, opts)
            assert is_grid
            assert pts.shape == (20**d, d)
            assert spacing == pytest.approx(1 / 19)

    def test_four_dims_shrinks_grid_into_budget(self):
        pts, spacing, is_grid = go._scan_points(4, go.LowerLevelOptions())
        assert is_grid
        assert pts.shape[0] == 17**4  # largest grid within 1e5 evaluations

    def test_five_dims_samples_with_face_coverage(self):
        opts = go.LowerLevelOptions()
        pts, _, is_grid = go._scan_points(5, opts)
        assert not is_grid
        assert pts.shape[0] == opts.budget
        # every face carries a dedicated block of points
        for j in range(5):
            for side in (0.0, 1.0):
                assert np.sum(pts[:, j] == side) >= 1000

    def test_deterministic(self):
        a, _, _ = go._scan_points(5, go.LowerLevelOptions())
        b, _, _ = go._scan_points(5, go.LowerLevelOptions())
        assert np.array_equal(a, b)
