import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lognnet.head import (HeadWeights, TrainConfig, TrainingDivergedError, example_loss, fit,
                          forward, forward_batch, gradient_check, gradients, init_weights)

from . import oracles


def zero_weights(P, H, M):
    return HeadWeights(np.zeros((P + 1, H)), np.zeros((H + 1, M)))


class TestForward:
    def test_zero_weights_uniform(self):
        probs, k = forward([1.0, 0.3, -0.2], zero_weights(2, 3, 4))
        assert probs.tolist() == [0.25] * 4
        assert k == 0

    def test_dominant_column_wins(self):
        w = zero_weights(2, 2, 2)
        w.W2[:, 1] = 5.0
        for s in ([1, 0.9, -0.9], [1, -100, 100], [1, 1e-6, 0]):
            assert forward(s, w)[1] == 1

    def test_random_matches_naive_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            P, H, M = rng.integers(1, 6, 3) + np.array([0, 0, 1])
            w = HeadWeights(rng.normal(size=(P + 1, H)), rng.normal(size=(H + 1, M)))
            s = np.concatenate(([1.0], rng.normal(size=P)))
            want = oracles.head_forward(w.W1.tolist(), w.W2.tolist(), s.tolist())
            np.testing.assert_allclose(forward(s, w)[0], want, rtol=1e-12, atol=1e-15)

    def test_width_mismatch(self):
        with pytest.raises(ValueError):
            forward_batch(np.ones((1, 5)), zero_weights(2, 2, 2))


class TestFit:
    def test_separable_four_points(self):
        S = np.array([[1, -1.0, -0.5], [1, -0.8, -1.0], [1, 0.9, 0.7], [1, 1.0, 0.4]])
        y = np.array([0, 0, 1, 1])
        # exhaustive threshold oracle: some axis-aligned cut separates the labels
        assert any(all((S[i, f] > t) == bool(y[i]) for i in range(4))
                   for f in (1, 2) for t in np.linspace(-1, 1, 41))
        w = fit(S, y, 3, 2, TrainConfig(epochs=50, learning_rate=0.5))
        assert (np.argmax(forward_batch(S, w), axis=1) == y).all()

    def test_single_example_loss_decreases(self):
        hist = []
        fit(np.array([[1.0, 0.4, -0.3]]), np.array([1]), 2, 2,
            TrainConfig(epochs=5, learning_rate=0.1), loss_history=hist)
        assert all(b < a for a, b in zip(hist, hist[1:]))

    def test_zero_learning_rate_keeps_init(self):
        S = np.array([[1.0, 0.2], [1.0, -0.4]])
        w = fit(S, np.array([0, 1]), 3, 2, TrainConfig(epochs=3, learning_rate=0.0, rng_seed=9))
        init = init_weights(2, 3, 2, 9)
        assert np.array_equal(w.W1, init.W1) and np.array_equal(w.W2, init.W2)

    def test_init_uniform_range(self):
        w = init_weights(10, 8, 3, 0)
        assert w.W1.min() >= -0.5 and w.W1.max() <= 0.5

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        S = np.hstack([np.ones((30, 1)), rng.normal(size=(30, 4))])
        y = rng.integers(0, 3, 30)
        cfg = TrainConfig(epochs=4, shuffle=True, rng_seed=5)
        a, b = fit(S, y, 3, 3, cfg), fit(S, y, 3, 3, cfg)
        assert a.W1.tobytes() == b.W1.tobytes()

    def test_divergence_raises(self):
        S = np.array([[1.0, 1e200], [1.0, -1e200]])
        with pytest.raises(TrainingDivergedError):
            fit(S, np.array([0, 1]), 2, 2, TrainConfig(epochs=2, learning_rate=1e200))

    def test_bad_labels(self):
        with pytest.raises(ValueError):
            fit(np.ones((2, 2)), np.array([0, 3]), 2, 2, TrainConfig(epochs=1))

    def test_step_matches_manual_gradient(self):
        rng = np.random.default_rng(11)
        w = HeadWeights(rng.uniform(-0.5, 0.5, (4, 3)), rng.uniform(-0.5, 0.5, (4, 2)))
        s = np.array([1.0, 0.3, -0.7, 0.1])
        dW1, dW2 = gradients(w, s, 1)
        trained = fit(s[None, :], np.array([1]), 3, 2, TrainConfig(epochs=1, learning_rate=0.2),
                      weights=w)
        np.testing.assert_allclose(trained.W1, w.W1 - 0.2 * dW1, rtol=1e-12)
        np.testing.assert_allclose(trained.W2, w.W2 - 0.2 * dW2, rtol=1e-12)


class TestGradientCheck:
    def test_random_instance(self):
        rng = np.random.default_rng(0)
        w = HeadWeights(rng.uniform(-1, 1, (5, 3)), rng.uniform(-1, 1, (4, 3)))
        s = np.concatenate(([1.0], rng.uniform(-1, 1, 4)))
        assert gradient_check(w, s, 2) < 1e-5

    def test_bias_only_input(self):
        rng = np.random.default_rng(1)
        w = HeadWeights(rng.uniform(-1, 1, (4, 3)), rng.uniform(-1, 1, (4, 2)))
        dW1, _ = gradients(w, [1.0, 0.0, 0.0, 0.0], 0)
        assert np.any(dW1[0] != 0)
        assert np.all(dW1[1:] == 0)

    def test_cloned_weights_same_deviation(self):
        rng = np.random.default_rng(2)
        w = HeadWeights(rng.uniform(-1, 1, (3, 2)), rng.uniform(-1, 1, (3, 2)))
        s = [1.0, 0.5, -0.5]
        assert gradient_check(w, s, 1) == gradient_check(w.copy(), s, 1)

    def test_loss_is_cross_entropy(self):
        w = zero_weights(1, 1, 4)
        assert example_loss(w, [1.0, 0.0], 3) == pytest.approx(np.log(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(2, 4), st.integers(0, 10**6))
def test_gradient_check_property(P, H, M, seed):
    rng = np.random.default_rng(seed)
    w = HeadWeights(rng.uniform(-1, 1, (P + 1, H)), rng.uniform(-1, 1, (H + 1, M)))
    s = np.concatenate(([1.0], rng.uniform(-1, 1, P)))
    assert gradient_check(w, s, int(rng.integers(M))) < 1e-5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    w = HeadWeights(rng.normal(size=(4, 3)) * 5, rng.normal(size=(4, 3)) * 5)
    S = np.hstack([np.ones((6, 1)), rng.normal(size=(6, 3)) * 10])
    probs = forward_batch(S, w)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-12)
    assert (probs >= 0).all()


def test_grid_of_small_shapes_runs():
    for P, H, M in itertools.product((1, 3), (1, 2), (2, 3)):
        w = init_weights(P + 1, H, M, 0)
        probs, k = forward(np.ones(P + 1), w)
        assert probs.shape == (M,) and 0 <= k < M
