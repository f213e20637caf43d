"""Smoke tests for the mlt python module against numpy references."""

import math

import numpy as np
import pytest

mlt = pytest.importorskip("mlt")


def uniform_weights(n):
    return mlt.ClassWeights.uniform(n)


class TestLosses:
    def test_bce_matches_numpy(self):
        scores = np.array([2.0, -1.0, 0.3])
        labels = [0, 2]
        y = np.array([1.0, 0.0, 1.0])
        p = 1.0 / (1.0 + np.exp(-scores))
        expected = np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p)))
        result = mlt.bce_loss(scores, labels, uniform_weights(3))
        assert result.value == pytest.approx(expected, rel=1e-12)
        np.testing.assert_allclose(result.gradient, (p - y) / 3.0, rtol=1e-12)

    def test_lsep_matches_numpy(self):
        scores = np.array([1.0, 0.0, -1.0, 0.5])
        labels = [0, 3]
        total = sum(
            math.exp(scores[j] - scores[i])
            for i in labels
            for j in range(4)
            if j not in labels
        )
        assert mlt.lsep_loss(scores, labels).value == pytest.approx(
            math.log1p(total), rel=1e-12
        )

    def test_wlsep_matches_numpy(self):
        scores = np.array([0.2, -0.4, 1.1])
        labels = [1]
        weights = np.array([1.0, 2.5, 1.0])
        inner = sum(math.exp(scores[j] - scores[1]) for j in (0, 2))
        expected = 2.5 * math.log1p(inner)
        result = mlt.wlsep_loss(scores, labels, mlt.ClassWeights(weights))
        assert result.value == pytest.approx(expected, rel=1e-12)

    def test_warp_hand_value(self):
        result = mlt.warp_loss(np.array([0.0, 2.0, 0.5]), [0], uniform_weights(3))
        assert result.value == pytest.approx(8.25, rel=1e-12)
        assert mlt.rank_of(np.array([0.0, 2.0, 0.5]), 0) == 3
        assert mlt.rank_weight(3) == pytest.approx(11.0 / 6.0)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(0, 2, size=12)
        labels = [1, 4, 7]
        weights = mlt.ClassWeights(rng.uniform(0.5, 2.0, size=12))
        for kind in ("bce", "lsep", "wlsep"):
            check = mlt.gradient_check(kind, scores, labels, weights, 1e-5)
            assert check.max_relative_error < 1e-6


class TestMetrics:
    def test_average_precision_against_numpy(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            scores = np.round(rng.normal(size=8), 1)
            positives = sorted(rng.choice(8, size=3, replace=False).tolist())
            order = np.lexsort((np.arange(8), -scores))
            hits, total = 0, 0.0
            for pos, cls in enumerate(order, start=1):
                if cls in positives:
                    hits += 1
                    total += hits / pos
            assert mlt.average_precision(scores, positives) == pytest.approx(
                total / 3, rel=1e-12
            )

    def test_metrics_report_fields(self):
        data = mlt.generate_synthetic_dataset(5, 6, 30, zipf=1.0, seed=4)
        preds = [np.asarray(ex.features[:5]) for ex in data.examples]
        report = mlt.compute_metrics(preds, data)
        assert 0.0 <= report.top1 <= 1.0
        assert report.micro_map == pytest.approx(1.0)  # noiseless one-hot features
        assert len(report.per_class_ap) == 5


class TestTraining:
    def test_separable_training_reaches_perfect_top1(self):
        data = mlt.generate_synthetic_dataset(
            4, 6, 40, zipf=0.8, co_label_prob=0.3, noise_std=0.0, seed=11
        )
        model, log = mlt.train(
            data, lr=0.5, momentum=0.9, epochs=50, batch_size=8, seed=3, loss="wlsep"
        )
        report = mlt.evaluate(model, data)
        assert report.top1 == pytest.approx(1.0)
        assert log.epoch_mean_loss[-1] < log.epoch_mean_loss[0]

    def test_training_is_deterministic(self):
        data = mlt.generate_synthetic_dataset(3, 4, 20, seed=5)
        m1, _ = mlt.train(data, epochs=5, seed=9)
        m2, _ = mlt.train(data, epochs=5, seed=9)
        np.testing.assert_array_equal(m1.head_weight, m2.head_weight)

    def test_model_roundtrip(self, tmp_path):
        model = mlt.init_model(6, 3, 0, 123)
        path = str(tmp_path / "model.mmtt")
        mlt.save_model(model, path)
        back = mlt.load_model(path)
        np.testing.assert_array_equal(back.head_weight, model.head_weight)
        np.testing.assert_array_equal(back.head_bias, model.head_bias)


class TestInterpretation:
    def test_cam_pipeline_separates_blobs(self):
        a = np.zeros((6, 10))
        a[1:4, 1:4] = 1.0
        b = np.zeros((6, 10))
        b[1:4, 6:9] = 1.0
        cams = [
            mlt.compute_cam([a, b], np.eye(2), 0),
            mlt.compute_cam([a, b], np.eye(2), 1),
        ]
        region = mlt.compose_multi_cam(mlt.separate_regions(cams))
        masks = region.per_class_masks
        assert masks[0].sum() == 9
        assert masks[1].sum() == 9
        assert not np.any(masks[0] & masks[1])
        np.testing.assert_allclose(
            region.composite, mlt.gaussian_smooth(np.maximum(a, b)), atol=1e-12
        )

    def test_dissection_primitives(self):
        grid = np.array([[0.0, 1.0], [1.0, 0.0]])
        mask = mlt.binarize_and_upsample(grid, 0.5, 4, 4)
        assert mask.dtype == bool and mask.shape == (4, 4)
        assert mlt.unit_threshold([np.arange(1.0, 11.0).reshape(2, 5)], 0.5) == 5.0

        full = np.ones((4, 4), dtype=bool)
        half = np.zeros((4, 4), dtype=bool)
        half[:2, :] = True
        assert mlt.unit_concept_iou([full], [half]) == 0.5

    def test_probe_unit(self):
        model = mlt.init_model(4, 3, 0, 7)
        model.head_weight = np.array(
            [[0.1, 0.9, -0.2], [0, 0, 0], [1, 2, 3], [0, 0, 0]]
        )
        assert mlt.probe_unit(model, 0) == [1, 0, 2]
        assert mlt.probe_unit(model, 2) == [2, 1, 0]


class TestTensorIO:
    def test_numpy_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        array = rng.normal(size=(3, 4, 5))
        path = str(tmp_path / "t.mmtt")
        mlt.write_tensor(path, array)
        np.testing.assert_array_equal(mlt.read_tensor(path), array)

    def test_dataset_roundtrip(self, tmp_path):
        data = mlt.generate_synthetic_dataset(4, 5, 25, co_label_prob=0.4, noise_std=0.3, seed=8)
        path = str(tmp_path / "d.jsonl")
        mlt.save_dataset(data, path)
        back = mlt.load_dataset(path)
        assert back.num_examples == 25
        np.testing.assert_array_equal(
            back.examples[3].features, data.examples[3].features
        )
        assert back.examples[3].labels == data.examples[3].labels
