import numpy as np
import pytest

from textmaps.decoder import decode
from textmaps.encoder import TextAnnotation
from textmaps.errors import ParameterError
from textmaps.estimators import InstanceDecoder, LabelMapEncoder
from textmaps.geometry import polygon_iou

from conftest import rect_polygon

RECT = rect_polygon(44.0, 54.0, 84.0, 74.0)
SAMPLES = [([TextAnnotation(RECT, instance_id=0)], (128, 128))]


class TestParamsProtocol:
    def test_get_params_roundtrip(self):
        enc = LabelMapEncoder(alpha=0.7, beta=1.1, mode="msr")
        assert enc.get_params() == {"alpha": 0.7, "beta": 1.1, "mode": "msr"}

    def test_set_params(self):
        enc = LabelMapEncoder().set_params(alpha=0.5)
        assert enc.alpha == 0.5

    def test_set_params_rejects_unknown(self):
        with pytest.raises(ParameterError):
            LabelMapEncoder().set_params(gamma=1.0)

    def test_decoder_params_cover_config(self):
        params = InstanceDecoder().get_params()
        for name in ("gamma", "epsilon", "gamma_scale", "min_kernel_area",
                     "binarize_region", "binarize_kernel", "alpha_radius_scale",
                     "connectivity", "mode"):
            assert name in params

    def test_repr_lists_params(self):
        assert "alpha=0.6" in repr(LabelMapEncoder())


class TestEncoderEstimator:
    def test_transform_matches_function(self):
        maps = LabelMapEncoder().fit(SAMPLES).transform(SAMPLES)[0]
        from textmaps.encoder import encode

        direct = encode(SAMPLES[0][0], 128, 128)
        np.testing.assert_array_equal(maps.text_region, direct.text_region)
        np.testing.assert_array_equal(maps.offset, direct.offset)

    def test_fit_validates_params(self):
        with pytest.raises(ParameterError):
            LabelMapEncoder(alpha=2.0).fit(SAMPLES)

    def test_bad_sample_shape(self):
        with pytest.raises(ParameterError):
            LabelMapEncoder().transform([("not", "a", "sample")])

    def test_fit_transform(self):
        out = LabelMapEncoder().fit_transform(SAMPLES)
        assert len(out) == 1


class TestDecoderEstimator:
    def test_predict_matches_function(self):
        from textmaps.decoder import ScoreMaps

        maps = LabelMapEncoder().transform(SAMPLES)
        instances = InstanceDecoder().fit(maps).predict(maps)[0]
        direct = decode(ScoreMaps.from_labels(maps[0]))
        assert len(instances) == len(direct) == 1
        np.testing.assert_array_equal(
            instances[0].polygon.vertices, direct[0].polygon.vertices
        )

    def test_pipeline_roundtrip_quality(self):
        maps = LabelMapEncoder().transform(SAMPLES)
        instances = InstanceDecoder().predict(maps)[0]
        assert polygon_iou(instances[0].polygon, RECT) >= 0.90

    def test_msr_mode(self):
        enc = LabelMapEncoder(mode="msr")
        dec = InstanceDecoder(mode="msr")
        instances = dec.predict(enc.transform(SAMPLES))[0]
        assert len(instances) == 1
        assert polygon_iou(instances[0].polygon, RECT) >= 0.90

    def test_rejects_bad_inputs(self):
        with pytest.raises(ParameterError):
            InstanceDecoder().predict([np.zeros((4, 4))])


sklearn = pytest.importorskip("sklearn")


class TestSklearnInterop:
    def test_clone(self):
        from sklearn.base import clone

        enc = LabelMapEncoder(alpha=0.55)
        cloned = clone(enc)
        assert cloned is not enc
        assert cloned.get_params() == enc.get_params()

    def test_pipeline(self):
        from sklearn.pipeline import Pipeline

        pipe = Pipeline([
            ("labels", LabelMapEncoder()),
            ("instances", InstanceDecoder()),
        ])
        result = pipe.fit(SAMPLES).predict(SAMPLES)
        assert polygon_iou(result[0][0].polygon, RECT) >= 0.90

    def test_grid_search_param_names(self):
        pipe_params = {
            "labels__alpha": 0.7,
            "instances__gamma": 4.0,
        }
        from sklearn.pipeline import Pipeline

        pipe = Pipeline([
            ("labels", LabelMapEncoder()),
            ("instances", InstanceDecoder()),
        ])
        pipe.set_params(**pipe_params)
        assert pipe.named_steps["labels"].alpha == 0.7
        assert pipe.named_steps["instances"].gamma == 4.0
