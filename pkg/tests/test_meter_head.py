import numpy as np
import pytest

from models.ctc.emission import BLANK, EmissionMatrix
from models.meter.labels import CANONICAL_ORDER, MeterLabel
from models.ml.meter_head import LinearHead, head_forward, head_train, pool_features
from utils.errors import DataError, DimensionMismatch, EmptyDataset
from tests.conftest import random_emission


def separable_dataset(rng, n_per_class=30):
    centers = {MeterLabel.TAWEEL: [1.0, 0.0, 0.0], MeterLabel.KAMEL: [0.0, 1.0, 0.0]}
    dataset = []
    for label, center in centers.items():
        for row in rng.normal(center, 0.05, size=(n_per_class, 3)):
            dataset.append((row, label))
    return dataset


class TestForward:
    def test_zero_head_is_uniform(self):
        probabilities = head_forward(LinearHead(5), np.arange(5.0))
        np.testing.assert_allclose(probabilities, np.full(17, 1 / 17))

    def test_simplex(self, rng):
        head = LinearHead.initialized(4, seed=3, scale=5.0)
        for _ in range(20):
            probabilities = head_forward(head, rng.normal(0, 50, size=4))
            assert np.all(probabilities >= 0)
            assert probabilities.sum() == pytest.approx(1.0, abs=1e-9)

    def test_shift_invariance(self, rng):
        head = LinearHead.initialized(4, seed=3, scale=1.0)
        x = rng.normal(size=4)
        before = head_forward(head, x)
        head.model.bias += 123.0
        np.testing.assert_allclose(head_forward(head, x), before, rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            head_forward(LinearHead(3), [1.0, 2.0])


class TestGradients:
    def test_matches_central_differences(self, rng):
        eps = 1e-6
        for trial in range(30):
            dim = int(rng.integers(1, 6))
            n = int(rng.integers(1, 5))
            head = LinearHead.initialized(dim, seed=trial, scale=1.0)
            X = rng.normal(size=(n, dim))
            targets = rng.integers(0, 17, size=n)
            _, grad_w, grad_b = head.loss_and_gradients(X, targets)

            numeric_w = np.zeros_like(grad_w)
            for i in range(17):
                for j in range(dim):
                    head.model.weights[i, j] += eps
                    up, _, _ = head.loss_and_gradients(X, targets)
                    head.model.weights[i, j] -= 2 * eps
                    down, _, _ = head.loss_and_gradients(X, targets)
                    head.model.weights[i, j] += eps
                    numeric_w[i, j] = (up - down) / (2 * eps)
            numeric_b = np.zeros_like(grad_b)
            for i in range(17):
                head.model.bias[i] += eps
                up, _, _ = head.loss_and_gradients(X, targets)
                head.model.bias[i] -= 2 * eps
                down, _, _ = head.loss_and_gradients(X, targets)
                head.model.bias[i] += eps
                numeric_b[i] = (up - down) / (2 * eps)

            for analytic, numeric in ((grad_w, numeric_w), (grad_b, numeric_b)):
                scale = np.abs(analytic) + np.abs(numeric)
                assert np.all(np.abs(analytic - numeric) <= 1e-4 * scale + 1e-8)


class TestTraining:
    def test_separable_reaches_full_accuracy(self, rng):
        head, losses = head_train(separable_dataset(rng), epochs=200, learning_rate=0.5, seed=1)
        X = np.array([x for x, _ in separable_dataset(rng)])
        predicted = head.predict(X)
        assert all(p is MeterLabel.TAWEEL for p in predicted[:30])
        assert all(p is MeterLabel.KAMEL for p in predicted[30:])
        assert head.metadata["metrics"]["train"]["accuracy"] == 100.0
        assert np.mean(losses[-10:]) < np.mean(losses[:10])

    def test_deterministic(self, rng):
        dataset = separable_dataset(rng)
        first, _ = head_train(dataset, epochs=5, seed=4)
        second, _ = head_train(dataset, epochs=5, seed=4)
        np.testing.assert_array_equal(first.weights, second.weights)

    def test_zero_epochs_keeps_initialization(self, rng):
        head, losses = head_train(separable_dataset(rng), epochs=0, seed=9)
        np.testing.assert_array_equal(head.weights, LinearHead.initialized(3, seed=9).weights)
        np.testing.assert_array_equal(head.bias, np.zeros(17))
        assert losses == []

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            head_train([])

    def test_inconsistent_dimensions(self):
        with pytest.raises(DimensionMismatch):
            head_train([([1.0, 2.0], MeterLabel.TAWEEL), ([1.0], MeterLabel.KAMEL)])


class TestPersistence:
    def test_save_and_load(self, rng, tmp_path):
        head, _ = head_train(separable_dataset(rng), epochs=3, seed=2)
        head.feature_names = [BLANK, " ", "ا"]
        path = head.save(tmp_path / "meter.head")
        loaded = LinearHead(1)
        loaded.load(path)
        assert loaded.dim == 3
        assert loaded.feature_names == [BLANK, " ", "ا"]
        np.testing.assert_allclose(loaded.weights, head.weights, rtol=1e-8)
        np.testing.assert_allclose(loaded.bias, head.bias, rtol=1e-8, atol=1e-12)

    def test_model_info_summarizes_training(self, rng, tmp_path):
        head, _ = head_train(separable_dataset(rng), epochs=3, seed=2)
        head.feature_names = [BLANK, " ", "ا"]
        loaded = LinearHead(1)
        loaded.load(head.save(tmp_path / "meter.head"))
        info = loaded.get_model_info()
        assert info["is_trained"]
        assert info["n_features"] == 3
        assert info["epochs"] == 3
        assert "feature_names" not in info

    def test_text_layout(self):
        text = LinearHead(2).to_text().splitlines()
        assert text[0] == "2"
        assert text[1].split("\t") == [label.value for label in CANONICAL_ORDER]
        assert len(text) == 20

    def test_bad_file(self):
        with pytest.raises(DataError):
            LinearHead.from_text("2\nTaweel\n0 0\n")

    def test_latest_model_loaded_by_default(self, rng, tmp_path):
        head, _ = head_train(separable_dataset(rng), epochs=1, seed=2)
        head.model_dir = tmp_path
        head.save()
        loaded = LinearHead(1, model_dir=str(tmp_path))
        loaded.load()
        assert loaded.dim == 3


class TestPooling:
    def test_single_frame(self):
        emission = EmissionMatrix.from_probabilities((BLANK, "a", "b"), [[0.2, 0.3, 0.5]])
        np.testing.assert_allclose(pool_features(emission), [0.2, 0.3, 0.5])

    def test_repeated_frame(self):
        one = EmissionMatrix.from_probabilities((BLANK, "a"), [[0.4, 0.6]])
        two = EmissionMatrix.from_probabilities((BLANK, "a"), [[0.4, 0.6], [0.4, 0.6]])
        np.testing.assert_allclose(pool_features(two), pool_features(one))

    def test_naive_summation(self, rng):
        emission = random_emission(rng, 11, 4)
        probabilities = np.exp(emission.values)
        expected = [sum(probabilities[t][v] for t in range(11)) / 11 for v in range(4)]
        np.testing.assert_allclose(pool_features(emission), expected, rtol=0, atol=1e-12)
