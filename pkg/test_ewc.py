"""Tests for the Fisher estimate and the EWC penalty."""
import numpy as np
import pytest

from data.labeled_set import LabeledSet
from ewc.fisher import AnchorParams, FisherDiag, LabelMode, estimate_fisher
from data.tasks import build_task
from ewc.penalty import ConsolidationState, QuadraticPenalty, ewc_penalty, lambda_from_retrain_rate
from models.model_manager import model_manager
from nn_core.layers import FullyConnected, ReLU, SoftmaxReadout
from nn_core.losses import softmax
from nn_core.network import NetworkSpec, copy_network, init_network
from protocols.hyperparams import HyperParams
from protocols.training import train_phase
from utils.errors import NumericError, ShapeError


@pytest.fixture
def small_net():
    spec = NetworkSpec((784,), (FullyConnected(784, 12), ReLU(), FullyConnected(12, 10), SoftmaxReadout(10)))
    return init_network(spec, seed=4)


def test_lambda_rule():
    assert lambda_from_retrain_rate(0.001) == pytest.approx(1000.0)
    assert lambda_from_retrain_rate(0.00001) == pytest.approx(100000.0)
    with pytest.raises(ValueError):
        lambda_from_retrain_rate(0.0)


def test_fisher_is_non_negative_and_shaped_like_params(small_net, mnist_splits):
    train, _ = mnist_splits
    fisher = estimate_fisher(small_net, train, n_samples=50, seed=1)
    for layer, params in zip(fisher.values, small_net.params):
        assert set(layer) == set(params)
        for name, value in layer.items():
            assert value.shape == params[name].shape
            assert (value >= 0).all()
            assert not value.flags.writeable
    assert fisher.total() > 0
    assert fisher.n_samples == 50


def test_fisher_is_deterministic(small_net, mnist_splits):
    train, _ = mnist_splits
    a = estimate_fisher(small_net, train, n_samples=30, seed=5)
    b = estimate_fisher(small_net, train, n_samples=30, seed=5)
    for la, lb in zip(a.values, b.values):
        for name in la:
            assert np.array_equal(la[name], lb[name])


def test_fisher_matches_brute_force_oracle():
    """Single linear layer: d log p(y|x) / dW = x^T (onehot(y) - p)."""
    rng = np.random.default_rng(0)
    spec = NetworkSpec((3,), (FullyConnected(3, 4), SoftmaxReadout(4)))
    state = init_network(spec, seed=2, dtype="float64")
    images = rng.random((6, 3))
    labels = np.array([0, 1, 2, 3, 1, 0])
    samples = LabeledSet(images, labels)

    fisher = estimate_fisher(state, samples, n_samples=6, seed=9, label_mode=LabelMode.TRUE)

    weight, bias = state.params[0]["weight"], state.params[0]["bias"]
    expected_w = np.zeros_like(weight)
    expected_b = np.zeros_like(bias)
    for x, y in zip(images, labels):
        p = softmax((x @ weight + bias)[None, :])[0]
        residual = -p
        residual[y] += 1.0
        expected_w += np.outer(x, residual) ** 2
        expected_b += residual ** 2
    np.testing.assert_allclose(fisher.values[0]["weight"], expected_w / 6, rtol=1e-10)
    np.testing.assert_allclose(fisher.values[0]["bias"], expected_b / 6, rtol=1e-10)


def test_fisher_rejects_empty_sets(small_net):
    empty = LabeledSet(np.zeros((0, 28, 28), dtype=np.float32), np.zeros(0, dtype=np.int64))
    with pytest.raises(ValueError):
        estimate_fisher(small_net, empty, n_samples=10, seed=0)


def test_fisher_diag_validation():
    with pytest.raises(NumericError):
        FisherDiag([{"weight": np.array([-1.0])}], n_samples=1)
    with pytest.raises(NumericError):
        FisherDiag([{"weight": np.array([np.inf])}], n_samples=1)


def test_penalty_is_zero_at_anchor(small_net):
    anchor = AnchorParams.capture(small_net)
    ones = [{name: np.ones_like(v) for name, v in layer.items()} for layer in small_net.params]
    value, grads = ewc_penalty(small_net, anchor, FisherDiag(ones, 1), lam=1000.0)
    assert value == 0.0
    assert all(not g.any() for layer in grads for g in layer.values())


def test_penalty_value_and_gradient(small_net):
    anchor = AnchorParams.capture(small_net)
    fisher_values = [{name: np.full(v.shape, 0.5) for name, v in layer.items()} for layer in small_net.params]
    small_net.params[0]["bias"][:] += 2.0
    value, grads = ewc_penalty(small_net, anchor, FisherDiag(fisher_values, 1), lam=10.0)
    # only the 12 first-layer biases moved, each by 2
    assert value == pytest.approx(0.5 * 10.0 * 12 * 0.5 * 4.0, rel=1e-5)
    np.testing.assert_allclose(grads[0]["bias"], np.full(12, 10.0 * 0.5 * 2.0), rtol=1e-5)
    assert not grads[0]["weight"].any()


def test_anchor_is_read_only_copy(small_net):
    anchor = AnchorParams.capture(small_net)
    small_net.params[0]["weight"][:] = 0.0
    assert anchor.values[0]["weight"].any()
    with pytest.raises(ValueError):
        anchor.values[0]["weight"][0, 0] = 1.0


def test_penalty_rejects_misaligned_anchor(small_net):
    other = init_network(NetworkSpec((784,), (FullyConnected(784, 10), SoftmaxReadout(10))), seed=0)
    fisher = FisherDiag([{n: np.zeros_like(v) for n, v in layer.items()} for layer in small_net.params], 1)
    with pytest.raises(ShapeError):
        ewc_penalty(small_net, AnchorParams.capture(other), fisher, lam=1.0)


def test_consolidation_penalty_uses_retrain_rate(small_net, mnist_splits):
    train, _ = mnist_splits
    consolidation = ConsolidationState.capture(small_net, train, n_samples=10, seed=0)
    penalty = consolidation.penalty_for(0.001)
    small_net.params[-2]["bias"][:] += 1.0
    value, _ = penalty(small_net)
    expected, _ = ewc_penalty(small_net, consolidation.anchor, consolidation.fisher, 1000.0)
    assert value == expected
    assert isinstance(penalty, QuadraticPenalty)
    assert penalty.lam == pytest.approx(1000.0)


def ones_like_params(state):
    return FisherDiag([{name: np.ones_like(v) for name, v in layer.items()} for layer in state.params], 1)


def test_penalty_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    spec = NetworkSpec((3,), (FullyConnected(3, 4), SoftmaxReadout(4)))
    state = init_network(spec, seed=1, dtype="float64")
    anchor = AnchorParams.capture(state)
    fisher = FisherDiag([{n: rng.random(v.shape) for n, v in layer.items()} for layer in state.params], 1)
    for layer in state.params:
        for value in layer.values():
            value += rng.normal(size=value.shape)

    _, grads = ewc_penalty(state, anchor, fisher, lam=3.0)
    eps = 1e-5
    for name, value in state.params[0].items():
        numeric = np.zeros_like(value)
        for flat in range(value.size):
            original = value.flat[flat]
            value.flat[flat] = original + eps
            plus, _ = ewc_penalty(state, anchor, fisher, lam=3.0)
            value.flat[flat] = original - eps
            minus, _ = ewc_penalty(state, anchor, fisher, lam=3.0)
            value.flat[flat] = original
            numeric.flat[flat] = (plus - minus) / (2 * eps)
        np.testing.assert_allclose(grads[0][name], numeric, rtol=1e-6, atol=1e-9)


def test_penalty_is_positive_only_on_the_fisher_support(small_net):
    anchor = AnchorParams.capture(small_net)
    fisher_values = [{name: np.zeros_like(v) for name, v in layer.items()} for layer in small_net.params]
    fisher_values[0]["weight"][5, 3] = 0.25
    fisher = FisherDiag(fisher_values, 1)

    small_net.params[-2]["bias"][:] += 1.0
    value, _ = ewc_penalty(small_net, anchor, fisher, lam=1000.0)
    assert value == 0.0

    small_net.params[0]["weight"][5, 3] += 1e-3
    value, _ = ewc_penalty(small_net, anchor, fisher, lam=1000.0)
    assert value > 0.0


def test_penalty_rejects_negative_lambda(small_net):
    anchor = AnchorParams.capture(small_net)
    with pytest.raises(ValueError):
        ewc_penalty(small_net, anchor, ones_like_params(small_net), lam=-1.0)
    with pytest.raises(ValueError):
        QuadraticPenalty(anchor, ones_like_params(small_net), -1.0)


@pytest.fixture
def retrain_setup(mnist_splits):
    task = build_task("D9-1a", *mnist_splits)
    spec = model_manager.get_family("EWC").build_spec(HyperParams("EWC", 1, 16, 0.001))
    return task, init_network(spec, seed=0)


def test_huge_lambda_pins_parameters_to_the_anchor(retrain_setup):
    task, state = retrain_setup
    anchor = AnchorParams.capture(state)
    penalty = QuadraticPenalty(anchor, ones_like_params(state), 1e8)

    result = train_phase(state, task.d2_train, [task.d2_test], 100, 0.001, 50, seed=2,
                         batch_size=10, penalty=penalty)

    assert result.state.step == 100
    movement = max(
        float(np.max(np.abs(value.astype(np.float64) - anchor.values[index][name])))
        for index, layer in enumerate(result.state.params)
        for name, value in layer.items()
    )
    assert movement < 1e-3


def test_zero_lambda_retraining_is_plain_sgd(retrain_setup):
    task, state = retrain_setup
    twin = copy_network(state)
    penalty = QuadraticPenalty(AnchorParams.capture(state), ones_like_params(state), 0.0)

    plain = train_phase(twin, task.d2_train, [task.d2_test], 30, 0.001, 10, seed=4, batch_size=10)
    penalized = train_phase(state, task.d2_train, [task.d2_test], 30, 0.001, 10, seed=4, batch_size=10,
                            penalty=penalty)

    assert penalized.curves[0].accuracies == plain.curves[0].accuracies
    for ours, theirs in zip(penalized.state.params, plain.state.params):
        for name in ours:
            assert np.array_equal(ours[name], theirs[name])
