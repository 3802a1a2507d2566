"""Network forward/gradient/training contracts and the gradient oracle."""

import numpy as np
import pytest

from ccwnet import (
    Architecture,
    CaseControlSample,
    Dataset,
    DivergenceError,
    DomainError,
    Network,
    TrainConfig,
    forward,
    forward_batch,
    gradient,
    init_network,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    train,
    weighted_loss,
)
from conftest import make_sample


def single_unit_net(w0=1.0, b0=0.0, w1=1.0, b1=0.0) -> Network:
    arch = Architecture(1, 1, 1)
    return Network(
        architecture=arch,
        weights=(np.array([[w0]]), np.array([[w1]])),
        biases=(np.array([b0]), np.array([b1])),
    )


def random_batch(rng, n, p, w1_frac=0.4) -> CaseControlSample:
    while True:
        y = (rng.random(n) < w1_frac).astype(int)
        if 0 < y.sum() < n:
            return CaseControlSample.from_dataset(Dataset(y, rng.uniform(0, 2, size=(n, p))))


class TestArchitecture:
    def test_parameter_size_formula(self):
        arch = Architecture(6, 3, 64)
        expected = 64 * 7 + (64 * 64 + 64) * 2 + 64 + 1
        assert arch.size == expected
        assert max(arch.width, arch.depth) <= arch.size

    def test_shapes(self):
        arch = Architecture(1, 2, 64)
        assert arch.layer_shapes() == [(64, 1), (64, 64), (1, 64)]


class TestInitNetwork:
    def test_shapes_and_zero_biases(self):
        net = init_network(Architecture(1, 2, 64), seed=0)
        assert [W.shape for W in net.weights] == [(64, 1), (64, 64), (1, 64)]
        assert [b.shape for b in net.biases] == [(64,), (64,), (1,)]
        assert all(np.all(b == 0) for b in net.biases)

    def test_determinism(self):
        a = init_network(Architecture(2, 3, 16), seed=42)
        b = init_network(Architecture(2, 3, 16), seed=42)
        for Wa, Wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(Wa, Wb)

    def test_he_variance(self):
        # first-layer weights over 10 seeds: variance ~ 2/fan_in = 2/p
        draws = np.concatenate(
            [init_network(Architecture(1, 2, 64), seed=s).weights[0].ravel() for s in range(10)]
        )
        assert np.var(draws) == pytest.approx(2.0, rel=0.2)


class TestForward:
    def test_zero_network_is_zero(self):
        arch = Architecture(3, 2, 8)
        net = Network(
            architecture=arch,
            weights=tuple(np.zeros(s) for s in arch.layer_shapes()),
            biases=tuple(np.zeros(s[0]) for s in arch.layer_shapes()),
        )
        assert forward(net, [1.0, -2.0, 5.0]) == 0.0

    def test_single_unit_relu_trace(self):
        net = single_unit_net()
        assert forward(net, -3.0) == 0.0  # ReLU kills the negative side
        assert forward(net, 2.0) == 2.0  # identity on the positive half-line

    def test_output_clamp(self):
        net = single_unit_net(w1=10.0)
        assert forward(net, 2.0) == 20.0
        assert forward(net, 2.0, clamp=5.0) == 5.0

    def test_positive_homogeneity_through_hidden_layer(self):
        rng = np.random.default_rng(3)
        net = init_network(Architecture(2, 1, 8), seed=5)
        c = 3.7
        scaled = Network(
            architecture=net.architecture,
            weights=(c * net.weights[0], net.weights[1]),
            biases=(c * net.biases[0], net.biases[1]),
        )
        X = rng.uniform(-1, 1, size=(20, 2))
        np.testing.assert_allclose(
            forward_batch(scaled, X), c * forward_batch(net, X), rtol=1e-12
        )


class TestWeightedLoss:
    def test_single_case_at_zero(self):
        # one row, y=1, g(x)=0, w1=1 -> log 2
        net = single_unit_net(w0=0.0, w1=0.0)  # g == 0 everywhere
        batch = Dataset(np.array([1]), np.array([[1.0]]))
        assert weighted_loss(net, batch, 1.0, 1.0) == pytest.approx(np.log(2), rel=1e-12)

    def test_unit_weights_equal_plain_bce(self):
        rng = np.random.default_rng(1)
        net = init_network(Architecture(2, 2, 8), seed=2)
        batch = random_batch(rng, 32, 2)
        g = forward_batch(net, batch.data.X)
        psi = 1 / (1 + np.exp(-g))
        bce = -np.mean(batch.data.y * np.log(psi) + (1 - batch.data.y) * np.log(1 - psi))
        assert weighted_loss(net, batch, 1.0, 1.0) == pytest.approx(bce, abs=1e-12)

    def test_control_term_scaling(self):
        # one row, y=0, g(x)=0, w0=2 -> log(2)/2
        net = single_unit_net(w0=0.0, w1=0.0)  # g == 0
        batch = Dataset(np.array([0]), np.array([[1.0]]))
        assert weighted_loss(net, batch, 1.0, 2.0) == pytest.approx(0.5 * np.log(2), rel=1e-12)

    def test_finite_for_huge_outputs(self):
        net = single_unit_net(w0=1e4, w1=1.0)  # g(x) = 1e4 * x
        batch = make_sample([2.0], [1.0])
        loss = weighted_loss(net, batch, 1.0, 1.0)
        assert np.isfinite(loss)


def kink_free(rng, arch, n_rows, margin=1e-3):
    """A (net, batch) pair whose ReLU pre-activations stay away from 0.

    Central differences are only a valid derivative oracle where the loss is
    differentiable; a pre-activation within the FD step of zero would make
    the difference quotient straddle the ReLU kink.
    """
    from ccwnet.mlp import _forward_raw

    while True:
        net = init_network(arch, seed=int(rng.integers(1 << 31)))
        batch = random_batch(rng, n_rows, arch.input_dim)
        _, pres, _ = _forward_raw(list(net.weights), list(net.biases), batch.data.X, None)
        if min(float(np.min(np.abs(z))) for z in pres) > margin:
            return net, batch


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(10)
        step = 1e-5
        for trial in range(100):
            depth = int(rng.integers(1, 4))
            width = int(rng.integers(2, 7))
            arch = Architecture(2, depth, width)
            net, batch = kink_free(rng, arch, 8)
            w1 = float(rng.uniform(0.5, 2.0))
            w0 = float(rng.uniform(0.5, 2.0))
            _, grads = gradient(net, batch, w1, w0)

            def loss_with(layer, kind, i, j, eps):
                Ws = [W.copy() for W in net.weights]
                bs = [b.copy() for b in net.biases]
                if kind == "W":
                    Ws[layer][i, j] += eps
                else:
                    bs[layer][i] += eps
                pert = Network(architecture=arch, weights=tuple(Ws), biases=tuple(bs))
                return weighted_loss(pert, batch, w1, w0)

            for layer in range(depth + 1):
                W = net.weights[layer]
                for i in range(W.shape[0]):
                    for j in range(W.shape[1]):
                        fd = (
                            loss_with(layer, "W", i, j, step)
                            - loss_with(layer, "W", i, j, -step)
                        ) / (2 * step)
                        an = grads.weights[layer][i, j]
                        assert abs(an - fd) <= 1e-5 * max(abs(an), abs(fd), 1e-8), (
                            f"trial {trial} layer {layer} W[{i},{j}]"
                        )
                for i in range(net.biases[layer].shape[0]):
                    fd = (
                        loss_with(layer, "b", i, 0, step) - loss_with(layer, "b", i, 0, -step)
                    ) / (2 * step)
                    an = grads.biases[layer][i]
                    assert abs(an - fd) <= 1e-5 * max(abs(an), abs(fd), 1e-8)

    def test_saturated_fit_is_stationary(self):
        # g = 80x - 40: cases far right, controls far left, psi(g) ~ y
        net = single_unit_net(w0=1.0, b0=0.0, w1=80.0, b1=-40.0)
        batch = make_sample([1.0, 0.9], [0.25, 0.1])
        _, grads = gradient(net, batch, 1.0, 1.0)
        norm = np.sqrt(
            sum(float(np.sum(W**2)) for W in grads.weights)
            + sum(float(np.sum(b**2)) for b in grads.biases)
        )
        assert norm < 1e-6

    def test_linear_in_inverse_weights(self):
        rng = np.random.default_rng(4)
        net = init_network(Architecture(2, 2, 4), seed=6)
        batch = random_batch(rng, 16, 2)
        _, g1 = gradient(net, batch, 1.0, 1.0)
        _, g2 = gradient(net, batch, 0.5, 0.5)  # doubles both inverse weights
        for a, b in zip(g1.weights, g2.weights):
            np.testing.assert_array_equal(2.0 * a, b)
        for a, b in zip(g1.biases, g2.biases):
            np.testing.assert_array_equal(2.0 * a, b)


class TestTrain:
    def separable_batch(self, rng, n=40):
        cases = rng.uniform(1.5, 2.0, n)
        controls = rng.uniform(0.0, 0.5, n)
        return make_sample(cases, controls)

    def test_zero_epochs_is_noop(self):
        rng = np.random.default_rng(0)
        net = init_network(Architecture(1, 1, 4), seed=1)
        out, history = train(net, self.separable_batch(rng), 1.0, 1.0, TrainConfig(max_epochs=0))
        assert history == []
        for a, b in zip(out.weights, net.weights):
            np.testing.assert_array_equal(a, b)

    def test_separable_fixture_reaches_low_loss(self):
        rng = np.random.default_rng(5)
        batch = self.separable_batch(rng)
        net = init_network(Architecture(1, 1, 4), seed=2)
        cfg = TrainConfig(learning_rate=0.01, max_epochs=2000, seed=3, early_stop_patience=10**9)
        _, history = train(net, batch, 1.0, 1.0, cfg)
        assert history[-1][1] < 0.1

    def test_full_batch_descent_is_monotone(self):
        rng = np.random.default_rng(5)
        batch = self.separable_batch(rng)
        net = init_network(Architecture(1, 1, 4), seed=2)
        cfg = TrainConfig(
            learning_rate=1e-3, max_epochs=200, batch_size=0, seed=3, early_stop_patience=10**9
        )
        _, history = train(net, batch, 1.3, 0.8, cfg)
        losses = np.array([h[1] for h in history])  # full-batch loss before each step
        assert np.all(np.diff(losses) <= 1e-8)

    def test_bit_determinism(self):
        rng = np.random.default_rng(6)
        batch = self.separable_batch(rng)
        net = init_network(Architecture(1, 2, 8), seed=4)
        cfg = TrainConfig(max_epochs=50, seed=9)
        out1, hist1 = train(net, batch, 1.2, 0.9, cfg)
        out2, hist2 = train(net, batch, 1.2, 0.9, cfg)
        assert hist1 == hist2
        for a, b in zip(out1.weights, out2.weights):
            np.testing.assert_array_equal(a, b)

    def test_divergence_reports_epoch(self):
        # the log-forms keep the loss finite under huge-but-representable
        # weights, so divergence needs multiplicative overflow across layers
        rng = np.random.default_rng(7)
        batch = self.separable_batch(rng)
        net = init_network(Architecture(1, 2, 8), seed=4)
        cfg = TrainConfig(learning_rate=1e160, max_epochs=100, seed=1)
        with pytest.raises(DivergenceError, match="divergence") as excinfo:
            train(net, batch, 1.0, 1.0, cfg)
        assert excinfo.value.epoch is not None and excinfo.value.epoch >= 1

    def test_early_stopping_truncates_on_plateau(self):
        # overlapping classes: the held-out loss plateaus at the Bayes level,
        # so sub-tolerance improvements accumulate and trip the patience counter
        rng = np.random.default_rng(8)

        def overlap(n):
            return make_sample(rng.uniform(0.8, 2.0, n), rng.uniform(0.0, 1.2, n))

        batch, val = overlap(40), overlap(20)
        net = init_network(Architecture(1, 1, 4), seed=2)
        cfg = TrainConfig(max_epochs=5000, seed=3, early_stop_tol=1e-6, early_stop_patience=50)
        _, history = train(net, batch, 1.0, 1.0, cfg, monitor=val)
        assert len(history) < 5000

    def test_returns_best_monitored_parameters(self):
        rng = np.random.default_rng(9)
        batch = self.separable_batch(rng)
        monitor = self.separable_batch(rng, n=20)
        net = init_network(Architecture(1, 1, 4), seed=2)
        cfg = TrainConfig(max_epochs=300, seed=3, early_stop_patience=10**9)
        out, history = train(net, batch, 1.0, 1.0, cfg, monitor=monitor)
        best_seen = min(h[2] for h in history)
        final_loss = weighted_loss(out, monitor, 1.0, 1.0)
        assert final_loss == pytest.approx(best_seen, abs=1e-12)


class TestSerialization:
    def test_round_trip_is_bit_exact(self, tmp_path):
        net = init_network(Architecture(3, 2, 16), seed=77)
        path = tmp_path / "net.json"
        save_network(net, path)
        back = load_network(path)
        assert back.architecture == net.architecture
        for a, b in zip(back.weights, net.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(back.biases, net.biases):
            np.testing.assert_array_equal(a, b)

    def test_dict_schema(self):
        net = init_network(Architecture(2, 1, 4), seed=0)
        d = network_to_dict(net)
        assert d["arch"] == {"p": 2, "depth": 1, "width": 4}
        assert len(d["weights"]) == 2 and len(d["biases"]) == 2
        assert network_from_dict(d).architecture == net.architecture

    def test_shape_validation(self):
        with pytest.raises(DomainError):
            Network(
                architecture=Architecture(2, 1, 4),
                weights=(np.zeros((4, 3)), np.zeros((1, 4))),
                biases=(np.zeros(4), np.zeros(1)),
            )
