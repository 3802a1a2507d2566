"""Grid-search model selection, relative error, and the gamma-shift diagnostic."""

import numpy as np
import pytest

from ccwnet import (
    Architecture,
    Dataset,
    DegenerateTruthError,
    DomainError,
    GFunction,
    GridSpec,
    Network,
    TrainConfig,
    evaluation_grid,
    fit,
    gamma_shift,
    relative_error,
    validation_accuracy,
)
from conftest import make_sample


def constant_net(value: float) -> Network:
    arch = Architecture(1, 1, 1)
    return Network(
        architecture=arch,
        weights=(np.array([[0.0]]), np.array([[0.0]])),
        biases=(np.array([0.0]), np.array([value])),
    )


def linear_g(slope=1.0, intercept=0.0, tag="lin", arity=1) -> GFunction:
    return GFunction(
        tag, arity, f"{slope}x+{intercept}", lambda X: slope * X[:, 0] + intercept
    )


def separable_pair(rng, n_train=40, n_val=10):
    train = make_sample(rng.uniform(1.5, 2.0, n_train), rng.uniform(0.0, 0.5, n_train))
    val = make_sample(rng.uniform(1.5, 2.0, n_val), rng.uniform(0.0, 0.5, n_val))
    return train, val


class TestValidationAccuracy:
    def test_always_one_classifier_on_all_cases(self):
        val = Dataset(np.ones(5, dtype=int), np.linspace(0, 2, 5).reshape(-1, 1))
        assert validation_accuracy(constant_net(10.0), val) == 1.0

    def test_tie_rule_classifies_as_case(self):
        # g == 0 means psi = 0.5 exactly; rule says predict 1
        val = make_sample([1.0, 1.5, 0.5], [0.2, 0.4])
        assert validation_accuracy(constant_net(0.0), val) == pytest.approx(3 / 5)

    def test_perfect_margin_net(self):
        net = Network(
            architecture=Architecture(1, 1, 1),
            weights=(np.array([[1.0]]), np.array([[80.0]])),
            biases=(np.array([0.0]), np.array([-40.0])),
        )
        val = make_sample([1.0, 1.8], [0.2, 0.4])
        assert validation_accuracy(net, val) == 1.0

    def test_empty_validation_errors(self):
        with pytest.raises(DomainError):
            validation_accuracy(constant_net(0.0), None)


class TestFit:
    def test_singleton_grid(self):
        rng = np.random.default_rng(0)
        train, val = separable_pair(rng)
        res = fit(train, val, (1.0, 1.0), GridSpec(depths=(2,), widths=(8,)),
                  TrainConfig(max_epochs=100, seed=1))
        assert (res.depth, res.width) == (2, 8)
        assert not res.weighted

    def test_tie_break_prefers_smaller_size(self):
        # both cells hit accuracy 1.0 on the separable fixture; S(2,8) < S(4,8)
        rng = np.random.default_rng(5)
        train, val = separable_pair(rng)
        res = fit(train, val, (1.0, 1.0), GridSpec(depths=(2, 4), widths=(8,)),
                  TrainConfig(max_epochs=300, seed=9))
        assert res.validation_accuracy == 1.0
        assert (res.depth, res.width) == (2, 8)

    def test_selection_determinism(self):
        rng = np.random.default_rng(3)
        train, val = separable_pair(rng)
        grid = GridSpec(depths=(1, 2), widths=(4, 8))
        cfg = TrainConfig(max_epochs=60, seed=11)
        a = fit(train, val, (1.3, 0.8), grid, cfg)
        b = fit(train, val, (1.3, 0.8), grid, cfg)
        assert (a.depth, a.width) == (b.depth, b.width)
        for Wa, Wb in zip(a.network.weights, b.network.weights):
            np.testing.assert_array_equal(Wa, Wb)

    def test_weighted_flag(self):
        rng = np.random.default_rng(4)
        train, val = separable_pair(rng, n_train=20, n_val=6)
        res = fit(train, val, (1.5, 0.7), GridSpec(depths=(1,), widths=(4,)),
                  TrainConfig(max_epochs=30, seed=2))
        assert res.weighted and (res.w1, res.w0) == (1.5, 0.7)


class TestRelativeError:
    def test_identity_fit(self):
        g = linear_g()
        X = evaluation_grid(50)
        assert relative_error(lambda x: g(x), g, X) == 0.0

    def test_two_point_arithmetic(self):
        # truth {1, -1}, fit {1.5, -0.5} -> RE = 1.0/2.0
        g = linear_g()
        X = np.array([[1.0], [-1.0]])
        fit_vals = {1.0: 1.5, -1.0: -0.5}
        fn = lambda A: np.array([fit_vals[v] for v in A[:, 0]])
        assert relative_error(fn, g, X) == pytest.approx(0.5)

    def test_constant_offset_closed_form(self):
        g = linear_g(slope=2.0, intercept=-1.0)
        X = evaluation_grid(100)
        c = 0.37
        fn = lambda A: g(A) + c
        expected = c * X.shape[0] / np.sum(np.abs(g(X)))
        assert relative_error(fn, g, X) == pytest.approx(expected, rel=1e-12)

    def test_joint_scale_invariance(self):
        base = linear_g(slope=1.5, intercept=0.3)
        X = evaluation_grid(64)
        fn = lambda A: base(A) + 0.2
        re1 = relative_error(fn, base, X)
        for c in (-3.0, 0.25, 10.0):
            scaled_g = GFunction("s", 1, "scaled", lambda A, c=c: c * base(A))
            scaled_fn = lambda A, c=c: c * fn(A)
            assert relative_error(scaled_fn, scaled_g, X) == pytest.approx(re1, rel=1e-12)

    def test_degenerate_truth(self):
        zero_g = GFunction("z", 1, "0", lambda X: np.zeros(X.shape[0]))
        with pytest.raises(DegenerateTruthError, match="degenerate truth"):
            relative_error(lambda X: X[:, 0], zero_g, evaluation_grid(10))


class TestGammaShift:
    def test_identical_fits(self):
        fn = lambda X: X[:, 0] ** 2
        assert gamma_shift(fn, fn, evaluation_grid(30)) == 0.0

    def test_constant_offset_recovers_gamma(self):
        # 0.7723 = log(0.684/0.316), the T1 shift at balanced sampling
        fn_w = lambda X: -3 + 2 * X[:, 0]
        fn_u = lambda X: -3 + 2 * X[:, 0] + 0.7723
        assert gamma_shift(fn_w, fn_u, evaluation_grid(200)) == pytest.approx(0.7723)

    def test_empty_points_error(self):
        with pytest.raises(DomainError):
            gamma_shift(lambda X: X[:, 0], lambda X: X[:, 0], np.empty((0, 1)))


class TestEvaluationGrid:
    def test_covers_open_interval(self):
        X = evaluation_grid(200)
        assert X.shape == (200, 1)
        assert X[0, 0] == pytest.approx(0.01)
        assert X[-1, 0] == pytest.approx(2.0)
        assert np.all(X > 0)


class TestGridSpec:
    def test_default_grid_matches_protocol(self):
        grid = GridSpec()
        assert grid.cells() == [(2, 64), (2, 128), (3, 64), (3, 128), (4, 64), (4, 128)]

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            GridSpec(depths=(), widths=(64,))

    def test_json_round_trip(self):
        grid = GridSpec(depths=(2, 3), widths=(16,))
        assert GridSpec.from_dict(grid.to_dict()) == grid
