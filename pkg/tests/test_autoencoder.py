import math

import numpy as np
import pytest

from texscore.autoencoder import (
    AutoencoderModel,
    TrainConfig,
    encode,
    forward,
    gradients,
    init_model,
    learn_manifold,
    load_model,
    loss,
    save_model,
    train,
)

from oracles import finite_difference_gradients


def tiny_model():
    return AutoencoderModel(
        w1=np.array([[0.5, -0.25]]),
        b1=np.array([0.1]),
        w2=np.array([[2.0], [-1.0]]),
        b2=np.array([0.3, -0.2]),
    )


class TestInit:
    def test_same_seed_identical(self):
        a = init_model(5, 3, seed=42)
        b = init_model(5, 3, seed=42)
        np.testing.assert_array_equal(a.w1, b.w1)
        np.testing.assert_array_equal(a.w2, b.w2)
        np.testing.assert_array_equal(a.b1, b.b1)
        np.testing.assert_array_equal(a.b2, b.b2)

    def test_different_seed_differs(self):
        a = init_model(5, 3, seed=1)
        b = init_model(5, 3, seed=2)
        assert not np.array_equal(a.w1, b.w1)

    def test_biases_zero_and_weights_bounded(self):
        model = init_model(7, 4, seed=9)
        assert np.all(model.b1 == 0.0)
        assert np.all(model.b2 == 0.0)
        r = math.sqrt(6.0 / (7 + 4))
        assert np.max(np.abs(model.w1)) <= r
        assert np.max(np.abs(model.w2)) <= r

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            init_model(0, 1, seed=0)


class TestForward:
    def test_zero_weights_give_half(self):
        model = AutoencoderModel(
            w1=np.zeros((3, 4)), b1=np.zeros(3), w2=np.zeros((4, 3)), b2=np.zeros(4)
        )
        z, xhat = forward(model, np.array([0.1, 0.9, 0.5, 0.0]))
        np.testing.assert_array_equal(z, np.full(3, 0.5))
        np.testing.assert_array_equal(xhat, np.full(4, 0.5))

    def test_hand_evaluated_tiny_model(self):
        # independent scalar evaluation of the same two-layer sigmoid chain
        model = tiny_model()
        x = np.array([0.4, 0.6])
        a1 = 0.5 * 0.4 + (-0.25) * 0.6 + 0.1
        z_ref = 1.0 / (1.0 + math.exp(-a1))
        y0 = 1.0 / (1.0 + math.exp(-(2.0 * z_ref + 0.3)))
        y1 = 1.0 / (1.0 + math.exp(-(-1.0 * z_ref - 0.2)))
        z, xhat = forward(model, x)
        assert z[0] == pytest.approx(z_ref, abs=1e-12)
        assert xhat[0] == pytest.approx(y0, abs=1e-12)
        assert xhat[1] == pytest.approx(y1, abs=1e-12)

    def test_hidden_activations_in_open_interval(self):
        rng = np.random.default_rng(3)
        model = init_model(6, 4, seed=1)
        z, xhat = forward(model, rng.random((10, 6)))
        assert np.all((z > 0) & (z < 1))
        assert np.all((xhat > 0) & (xhat < 1))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            forward(tiny_model(), np.zeros(3))

    def test_encode_matches_forward(self):
        rng = np.random.default_rng(4)
        model = init_model(5, 2, seed=8)
        batch = rng.random((6, 5))
        np.testing.assert_array_equal(encode(model, batch), forward(model, batch).z)


class TestLoss:
    def test_perfect_reconstruction_no_penalty(self):
        model = AutoencoderModel(
            w1=np.zeros((2, 2)), b1=np.zeros(2), w2=np.zeros((2, 2)), b2=np.zeros(2)
        )
        batch = np.full((3, 2), 0.5)  # xhat is exactly 0.5 everywhere
        assert loss(model, batch, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_half_squared_error(self):
        # single row, reconstruction offset (0.1, 0) -> loss 0.005
        model = AutoencoderModel(
            w1=np.zeros((1, 2)), b1=np.zeros(1), w2=np.zeros((2, 1)), b2=np.zeros(2)
        )
        batch = np.array([[0.4, 0.5]])  # xhat = (0.5, 0.5)
        assert loss(model, batch, 0.0) == pytest.approx(0.005, abs=1e-15)

    def test_penalty_term(self):
        # zero reconstruction error, ||W||_F^2 = 3 total, lambda = 2 -> 3
        w1 = np.array([[1.0, 0.0], [1.0, 0.0]])  # frobenius^2 = 2
        w2 = np.array([[1.0, 0.0], [0.0, 0.0]])  # frobenius^2 = 1
        model = AutoencoderModel(w1=w1, b1=np.zeros(2), w2=w2, b2=np.zeros(2))
        batch = forward(model, np.array([[0.3, 0.7]])).xhat  # fixed point rows
        assert loss(model, batch, 2.0) == pytest.approx(
            3.0 + loss(model, batch, 0.0), abs=1e-12
        )

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            loss(tiny_model(), np.empty((0, 2)), 0.0)


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(77)
        checked = 0
        for trial in range(24):
            p = int(rng.integers(2, 7))
            n_hidden = int(rng.integers(1, 4))
            n = int(rng.integers(1, 5))
            lam = float(rng.choice([0.0, 0.01, 0.3]))
            model = init_model(p, n_hidden, seed=int(rng.integers(0, 2**31)))
            batch = rng.random((n, p))
            analytic = gradients(model, batch, lam)

            params = {
                "w1": model.w1.copy(),
                "b1": model.b1.copy(),
                "w2": model.w2.copy(),
                "b2": model.b2.copy(),
            }

            def loss_fn():
                return loss(AutoencoderModel(**params), batch, lam)

            numeric = finite_difference_gradients(loss_fn, params, eps=1e-5)
            for name in params:
                ga, gn = analytic[name], numeric[name]
                denom = np.maximum(np.maximum(np.abs(ga), np.abs(gn)), 1e-6)
                assert np.max(np.abs(ga - gn) / denom) < 1e-4, (trial, name)
            checked += 1
        assert checked >= 20

    def test_penalty_contribution_is_linear_in_weights(self):
        rng = np.random.default_rng(5)
        model = init_model(4, 2, seed=11)
        batch = rng.random((3, 4))
        lam = 0.37
        g0 = gradients(model, batch, 0.0)
        g1 = gradients(model, batch, lam)
        np.testing.assert_allclose(g1["w1"] - g0["w1"], lam * model.w1, atol=1e-12)
        np.testing.assert_allclose(g1["w2"] - g0["w2"], lam * model.w2, atol=1e-12)

    def test_bias_gradients_ignore_penalty(self):
        rng = np.random.default_rng(6)
        model = init_model(4, 2, seed=12)
        batch = rng.random((3, 4))
        g0 = gradients(model, batch, 0.0)
        g1 = gradients(model, batch, 5.0)
        np.testing.assert_array_equal(g0["b1"], g1["b1"])
        np.testing.assert_array_equal(g0["b2"], g1["b2"])


class TestTrain:
    def test_loss_decreases(self):
        rng = np.random.default_rng(7)
        data = rng.random((20, 6))
        config = TrainConfig(learning_rate=0.1, epochs=50, batch_size=32, seed=3)
        before = loss(init_model(6, 3, config.seed), data, config.weight_penalty)
        model = train(data, 3, config)
        after = loss(model, data, config.weight_penalty)
        assert after < before
        for arr in (model.w1, model.b1, model.w2, model.b2):
            assert np.all(np.isfinite(arr))

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        data = rng.random((12, 5))
        config = TrainConfig(epochs=20, seed=99)
        a = train(data, 2, config)
        b = train(data, 2, config)
        np.testing.assert_array_equal(a.w1, b.w1)
        np.testing.assert_array_equal(a.b2, b.b2)

    def test_identical_rows_reconstruction_improves(self):
        row = np.array([0.25, 0.65, 0.45, 0.8])
        data = np.tile(row, (6, 1))
        config = TrainConfig(learning_rate=0.5, epochs=200, batch_size=6, seed=1)
        model = train(data, 2, config)
        initial = init_model(4, 2, config.seed)
        err_before = np.abs(forward(initial, row).xhat - row).mean()
        err_after = np.abs(forward(model, row).xhat - row).mean()
        assert err_after < err_before

    def test_no_nan_at_half_learning_rate(self):
        rng = np.random.default_rng(9)
        data = rng.random((16, 5))
        config = TrainConfig(learning_rate=0.5, epochs=120, batch_size=4, seed=2)
        model = train(data, 3, config)
        for arr in (model.w1, model.b1, model.w2, model.b2):
            assert np.all(np.isfinite(arr))

    def test_capacity_on_four_points(self):
        # overcomplete hidden layer memorizes a 4-point dataset
        data = np.array(
            [
                [0.2, 0.8, 0.4],
                [0.7, 0.3, 0.6],
                [0.35, 0.55, 0.75],
                [0.6, 0.45, 0.25],
            ]
        )
        config = TrainConfig(
            learning_rate=1.0, epochs=2000, batch_size=4, weight_penalty=0.0, seed=5
        )
        model = train(data, 4, config)
        _, xhat = forward(model, data)
        assert np.abs(xhat - data).mean() < 0.05

    def test_out_of_range_data_rejected(self):
        with pytest.raises(ValueError):
            train(np.array([[1.5, 0.2]]), 1, TrainConfig(epochs=1, seed=0))


class TestLearnManifold:
    def test_shape_and_range(self):
        rng = np.random.default_rng(10)
        data = rng.random((9, 5))
        z = learn_manifold(data, 3, TrainConfig(epochs=10, seed=4))
        assert z.shape == (9, 3)
        assert np.all((z > 0) & (z < 1))

    def test_rows_match_forward(self):
        rng = np.random.default_rng(11)
        data = rng.random((6, 4))
        config = TrainConfig(epochs=15, seed=21)
        model = train(data, 2, config)
        z = learn_manifold(data, 2, config, model=model)
        for i in range(6):
            np.testing.assert_array_equal(z[i], forward(model, data[i]).z)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(12)
        data = rng.random((8, 4))
        config = TrainConfig(epochs=10, seed=33)
        model = train(data, 2, config)
        perm = rng.permutation(8)
        z = learn_manifold(data, 2, config, model=model)
        z_perm = learn_manifold(data[perm], 2, config, model=model)
        np.testing.assert_array_equal(z[perm], z_perm)


class TestSerialization:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(13)
        model = train(rng.random((10, 4)), 2, TrainConfig(epochs=25, seed=6))
        path = tmp_path / "ae.txt"
        save_model(model, path)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.w1, model.w1)
        np.testing.assert_array_equal(loaded.b1, model.b1)
        np.testing.assert_array_equal(loaded.w2, model.w2)
        np.testing.assert_array_equal(loaded.b2, model.b2)

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("texscore-ae 999 2 1\n")
        with pytest.raises(ValueError):
            load_model(path)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"learning_rate": 0.0},
            {"learning_rate": -1.0},
            {"epochs": 0},
            {"batch_size": 0},
            {"weight_penalty": -0.1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)
