import numpy as np
import pytest

from shapereg import constraints as cs
from shapereg import features as ft
from shapereg import model as md
from shapereg.errors import ModelFormatError, VersionMismatch

K = cs.ConstraintKind


def small_model(w=None, ranges=None):
    fm = ft.enumerate_multi_indices((1, 2))
    if w is None:
        w = np.arange(1.0, fm.dimension + 1)
    if ranges is None:
        ranges = md.unit_ranges(2)
    return md.TrainedModel(
        feature_map=fm, w=w, input_ranges=ranges,
        constraint_set=(cs.ShapeConstraint(K.UPPER_BOUND, level=5.0),),
        provenance={"mode": "adaptive", "lambda": 0.01},
    )


class TestPredict:
    def test_constant_model(self):
        fm = ft.enumerate_multi_indices((2, 2))
        w = np.zeros(fm.dimension)
        w[0] = 3.0
        model = md.TrainedModel(feature_map=fm, w=w, input_ranges=md.unit_ranges(2))
        for pt in ([0.0, 0.0], [0.5, 0.9], [1.0, 1.0]):
            assert model.predict(pt) == pytest.approx(3.0)

    def test_identity_scaling_linear_model(self):
        fm = ft.enumerate_multi_indices((1,))
        model = md.TrainedModel(
            feature_map=fm, w=np.array([0.0, 1.0]), input_ranges=md.unit_ranges(1)
        )
        assert model.predict([0.7]) == pytest.approx(0.7)

    def test_scaling_applied(self):
        fm = ft.enumerate_multi_indices((1,))
        ranges = np.array([[100.0, 200.0]])
        model = md.TrainedModel(feature_map=fm, w=np.array([0.0, 1.0]), input_ranges=ranges)
        assert model.predict([150.0]) == pytest.approx(0.5)

    def test_extrapolation_flag(self):
        model = small_model()
        assert not model.extrapolates([0.5, 0.5])
        assert model.extrapolates([1.5, 0.5])
        # out-of-range points are still evaluated
        assert np.isfinite(model.predict([1.5, 0.5]))

    def test_batch_matches_single(self, rng):
        model = small_model(w=rng.normal(size=5))
        pts = rng.uniform(size=(30, 2))
        batch = model.predict_batch(pts)
        for i in (0, 15, 29):
            assert batch[i] == pytest.approx(model.predict(pts[i]), rel=1e-14)

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            small_model().predict([0.1])

    def test_degenerate_ranges_rejected(self):
        fm = ft.enumerate_multi_indices((1,))
        with pytest.raises(ValueError):
            md.TrainedModel(
                feature_map=fm, w=np.zeros(2), input_ranges=np.array([[1.0, 1.0]])
            )


class TestSlice:
    def test_constant_model_is_flat(self):
        fm = ft.enumerate_multi_indices((1, 1))
        w = np.zeros(3)
        w[0] = 2.5
        model = md.TrainedModel(feature_map=fm, w=w, input_ranges=md.unit_ranges(2))
        pairs = md.slice_model(model, [0.4, 0.6], axis=0, resolution=7)
        assert len(pairs) == 7
        assert all(v == pytest.approx(2.5) for _, v in pairs)

    def test_resolution_two_returns_endpoints(self):
        model = small_model(ranges=np.array([[10.0, 20.0], [0.0, 1.0]]))
        pairs = md.slice_model(model, [15.0, 0.5], axis=0, resolution=2)
        assert [t for t, _ in pairs] == [10.0, 20.0]

    def test_refined_slice_contains_coarse_points(self, rng):
        model = small_model(w=rng.normal(size=5))
        r = 9
        coarse = md.slice_model(model, [0.3, 0.3], axis=1, resolution=r)
        fine = md.slice_model(model, [0.3, 0.3], axis=1, resolution=2 * r - 1)
        for (tc, vc), (tf, vf) in zip(coarse, fine[::2]):
            assert tc == tf
            assert vc == vf

    def test_pairs_sorted_by_t(self, rng):
        model = small_model(w=rng.normal(size=5))
        pairs = md.slice_model(model, [0.5, 0.5], axis=0, resolution=33)
        ts = [t for t, _ in pairs]
        assert ts == sorted(ts)

    def test_axis_and_resolution_validated(self):
        model = small_model()
        with pytest.raises(ValueError):
            md.slice_model(model, [0.5, 0.5], axis=5, resolution=10)
        with pytest.raises(ValueError):
            md.slice_model(model, [0.5, 0.5], axis=0, resolution=1)


class TestSerialization:
    def test_round_trip_structure(self, rng):
        model = small_model(w=rng.normal(size=5))
        back = md.deserialize(md.serialize(model))
        assert back.feature_map.degrees == model.feature_map.degrees
        assert np.array_equal(back.w, model.w)
        assert np.array_equal(back.input_ranges, model.input_ranges)
        assert back.constraint_set == model.constraint_set
        assert back.provenance == model.provenance

    def test_round_trip_predictions_bit_exact(self, rng):
        model = small_model(w=rng.normal(size=5))
        back = md.deserialize(md.serialize(model))
        pts = rng.uniform(size=(100, 2))
        np.testing.assert_array_equal(model.predict_batch(pts), back.predict_batch(pts))

    def test_large_model_round_trip_bit_exact(self, rng):
        fm = ft.enumerate_multi_indices((10, 10, 10, 10))
        assert fm.dimension == 1001
        model = md.TrainedModel(
            feature_map=fm, w=rng.normal(size=1001), input_ranges=md.unit_ranges(4)
        )
        back = md.deserialize(md.serialize(model))
        pts = rng.uniform(size=(50, 4))
        np.testing.assert_array_equal(model.predict_batch(pts), back.predict_batch(pts))

    def test_version_tamper_rejected(self):
        doc = md.model_to_doc(small_model())
        doc["version"] = 42
        with pytest.raises(VersionMismatch):
            md.model_from_doc(doc)

    def test_malformed_document_rejected(self):
        with pytest.raises(ModelFormatError):
            md.deserialize(b"not json at all{{{")
        with pytest.raises(ModelFormatError):
            md.model_from_doc({"format": "something-else", "version": 1})

    def test_file_round_trip(self, tmp_path, rng):
        model = small_model(w=rng.normal(size=5))
        path = tmp_path / "model.json"
        md.save_model(path, model)
        back = md.load_model(path)
        assert np.array_equal(back.w, model.w)
