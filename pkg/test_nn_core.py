"""Tests for the network engine: layers, passes, loss, optimizer and accuracy."""
import numpy as np
import pytest

from nn_core.layers import Conv, Dropout, FullyConnected, LWTA, MaxPool, ReLU, SoftmaxReadout
from nn_core.losses import cross_entropy_loss
from nn_core.metrics import accuracy, predict
from nn_core.network import (
    Mode, NetworkSpec, NetworkState, backward, copy_network, forward, init_network,
    iter_parameters, restore_network,
)
from nn_core.optim import sgd_momentum_step
from utils.errors import NumericError, ShapeError, SpecError, StaleTraceError


def loss_and_grads(state, x, y, mode=Mode.EVAL, seed=0):
    logits, trace = forward(state, x, mode, rng_seed=seed)
    loss, dlogits = cross_entropy_loss(logits, y)
    return loss, backward(state, trace, dlogits)


def check_gradients(spec, x, y, mode=Mode.EVAL, entries_per_tensor=6, eps=1e-6):
    """Compare backward() with central differences on random parameter entries."""
    state = init_network(spec, seed=3, dtype="float64")
    _, grads = loss_and_grads(state, x, y, mode, seed=7)
    rng = np.random.default_rng(0)
    for index, name, value in iter_parameters(state.params):
        for _ in range(entries_per_tensor):
            flat = int(rng.integers(value.size))
            original = value.flat[flat]
            value.flat[flat] = original + eps
            plus, _ = cross_entropy_loss(forward(state, x, mode, rng_seed=7)[0], y)
            value.flat[flat] = original - eps
            minus, _ = cross_entropy_loss(forward(state, x, mode, rng_seed=7)[0], y)
            value.flat[flat] = original
            numeric = (plus - minus) / (2 * eps)
            analytic = grads[index][name].flat[flat]
            assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-7), f"layer {index} {name}[{flat}]"


def test_fc_gradients():
    rng = np.random.default_rng(1)
    spec = NetworkSpec((6,), (FullyConnected(6, 5), ReLU(), FullyConnected(5, 3), SoftmaxReadout(3)))
    check_gradients(spec, rng.standard_normal((4, 6)), np.array([0, 2, 1, 2]))


def test_conv_maxpool_gradients():
    rng = np.random.default_rng(2)
    spec = NetworkSpec((1, 6, 6), (
        Conv(2, 3, padding=1), MaxPool(2), ReLU(), FullyConnected(18, 3), SoftmaxReadout(3),
    ))
    check_gradients(spec, rng.standard_normal((3, 1, 6, 6)), np.array([1, 0, 2]))


def test_strided_conv_gradients():
    rng = np.random.default_rng(3)
    spec = NetworkSpec((2, 6, 6), (Conv(3, 3, stride=2, padding=1), ReLU(), FullyConnected(27, 4), SoftmaxReadout(4)))
    check_gradients(spec, rng.standard_normal((2, 2, 6, 6)), np.array([3, 1]))


def test_lwta_gradients():
    rng = np.random.default_rng(4)
    spec = NetworkSpec((5,), (FullyConnected(5, 6), LWTA(2), FullyConnected(6, 3), SoftmaxReadout(3)))
    check_gradients(spec, rng.standard_normal((4, 5)), np.array([0, 1, 2, 1]))


def test_dropout_gradients_in_train_mode():
    rng = np.random.default_rng(5)
    spec = NetworkSpec((6,), (Dropout(0.2), FullyConnected(6, 8), Dropout(0.5), ReLU(), FullyConnected(8, 3), SoftmaxReadout(3)))
    check_gradients(spec, rng.standard_normal((4, 6)), np.array([2, 2, 0, 1]), mode=Mode.TRAIN)


def test_init_is_deterministic_and_he_scaled():
    spec = NetworkSpec((784,), (FullyConnected(784, 200), FullyConnected(200, 10), SoftmaxReadout(10)))
    a = init_network(spec, seed=1)
    b = init_network(spec, seed=1)
    for (_, _, x), (_, _, y) in zip(iter_parameters(a.params), iter_parameters(b.params)):
        assert np.array_equal(x, y)
    weight, bias = a.params[0]["weight"], a.params[0]["bias"]
    assert bias.shape == (200,) and not bias.any()
    assert weight.std() == pytest.approx(np.sqrt(2 / 784), rel=0.2)
    assert not a.momentum[0]["weight"].any()


def test_malformed_specs_are_rejected():
    with pytest.raises(SpecError):
        init_network(NetworkSpec((784,), ()), seed=0)
    with pytest.raises(SpecError):
        init_network(NetworkSpec((784,), (FullyConnected(700, 10), SoftmaxReadout(10))), seed=0)
    with pytest.raises(SpecError):
        init_network(NetworkSpec((784,), (FullyConnected(784, 10),)), seed=0)
    with pytest.raises(SpecError):
        init_network(NetworkSpec((1, 5, 5), (MaxPool(2), FullyConnected(4, 10), SoftmaxReadout(10))), seed=0)


def test_forward_shapes_and_eval_determinism():
    spec = NetworkSpec((784,), (Dropout(0.2), FullyConnected(784, 20), ReLU(), FullyConnected(20, 10), SoftmaxReadout(10)))
    state = init_network(spec, seed=0)
    batch = np.random.default_rng(0).random((5, 28, 28)).astype(np.float32)
    first, _ = forward(state, batch, Mode.EVAL)
    second, _ = forward(state, batch, Mode.EVAL, rng_seed=99)
    assert first.shape == (5, 10)
    assert np.array_equal(first, second)
    with pytest.raises(ShapeError):
        forward(state, np.zeros((5, 700)))


def test_lwta_keeps_only_the_block_winner():
    layer = LWTA(2)
    y, _ = layer.forward({}, np.array([[1.0, 2.0, 3.0, -1.0]]), False, None)
    assert y.tolist() == [[0.0, 2.0, 3.0, 0.0]]
    _, cache = layer.forward({}, np.array([[1.0, 2.0]]), False, None)
    dx, _ = layer.backward({}, cache, np.array([[5.0, 7.0]]))
    assert dx.tolist() == [[0.0, 7.0]]


def test_maxpool_ties_route_to_lowest_index():
    x = np.ones((1, 1, 2, 2))
    y, cache = MaxPool(2).forward({}, x, False, None)
    dx, _ = MaxPool(2).backward({}, cache, np.array([[[[3.0]]]]))
    assert y.item() == 1.0
    assert dx[0, 0].tolist() == [[3.0, 0.0], [0.0, 0.0]]


def test_dropout_statistics():
    rng = np.random.default_rng(0)
    x = np.ones((200, 500))
    y, mask = Dropout(0.5).forward({}, x, True, rng)
    assert (y == 0).mean() == pytest.approx(0.5, abs=0.01)
    assert y.mean() == pytest.approx(1.0, abs=0.02)
    same, cache = Dropout(0.5).forward({}, x, False, rng)
    assert cache is None and np.array_equal(same, x)


@pytest.mark.parametrize("rate", [0.2, 0.5])
def test_dropout_is_unbiased_per_unit(rate):
    rng = np.random.default_rng(1)
    unit_values = np.linspace(0.5, 2.0, 20)
    x = np.tile(unit_values, (100_000, 1))
    y, _ = Dropout(rate).forward({}, x, True, rng)
    np.testing.assert_allclose(y.mean(axis=0), unit_values, rtol=0.02)


def test_backward_rejects_stale_traces():
    spec = NetworkSpec((3,), (FullyConnected(3, 2), SoftmaxReadout(2)))
    state = init_network(spec, seed=0)
    logits, trace = forward(state, np.ones((1, 3)))
    _, dlogits = cross_entropy_loss(logits, [1])
    grads = backward(state, trace, dlogits)
    sgd_momentum_step(state, grads, 0.1)
    with pytest.raises(StaleTraceError):
        backward(state, trace, dlogits)
    with pytest.raises(StaleTraceError):
        backward(copy_network(state), trace, dlogits)


def test_zero_upstream_gradient_gives_zero_gradients():
    spec = NetworkSpec((4,), (FullyConnected(4, 6), ReLU(), FullyConnected(6, 3), SoftmaxReadout(3)))
    state = init_network(spec, seed=0)
    logits, trace = forward(state, np.ones((2, 4)))
    grads = backward(state, trace, np.zeros_like(logits))
    assert all(not g.any() for layer in grads for g in layer.values())


def test_cross_entropy_values():
    loss, grad = cross_entropy_loss(np.zeros((2, 10)), [3, 7])
    assert loss == pytest.approx(np.log(10))
    assert grad.sum() == pytest.approx(0.0, abs=1e-12)
    peaked = np.full((1, 10), -1e4)
    peaked[0, 4] = 1e4
    assert cross_entropy_loss(peaked, [4])[0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        cross_entropy_loss(np.zeros((1, 10)), [10])
    with pytest.raises(ShapeError):
        cross_entropy_loss(np.zeros((2, 10)), [1])


def test_cross_entropy_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    logits = rng.standard_normal((4, 10))
    labels = np.array([1, 5, 9, 0])
    _, grad = cross_entropy_loss(logits, labels)
    eps = 1e-6
    for i in range(4):
        for j in range(10):
            bumped = logits.copy()
            bumped[i, j] += eps
            plus = cross_entropy_loss(bumped, labels)[0]
            bumped[i, j] -= 2 * eps
            minus = cross_entropy_loss(bumped, labels)[0]
            assert grad[i, j] == pytest.approx((plus - minus) / (2 * eps), rel=1e-4, abs=1e-8)


def scalar_state(theta: float) -> NetworkState:
    return NetworkState(
        spec=None,
        params=[{"weight": np.array([theta])}],
        momentum=[{"weight": np.zeros(1)}],
        layer_shapes=[],
    )


def test_momentum_recurrence():
    state = scalar_state(1.0)
    grads = [{"weight": np.array([1.0])}]
    sgd_momentum_step(state, grads, 0.1, 0.99)
    assert state.params[0]["weight"][0] == pytest.approx(0.9)
    sgd_momentum_step(state, grads, 0.1, 0.99)
    assert state.params[0]["weight"][0] == pytest.approx(0.9 - 0.199)
    assert state.step == 2


def test_momentum_fixed_point_and_validation():
    state = scalar_state(2.0)
    sgd_momentum_step(state, [{"weight": np.zeros(1)}], 0.1)
    assert state.params[0]["weight"][0] == 2.0
    with pytest.raises(ValueError):
        sgd_momentum_step(state, [{"weight": np.zeros(1)}], 0.0)
    with pytest.raises(NumericError):
        sgd_momentum_step(state, [{"weight": np.array([np.nan])}], 0.1)
    assert state.params[0]["weight"][0] == 2.0
    with pytest.raises(ShapeError):
        sgd_momentum_step(state, [{"weight": np.zeros(2)}], 0.1)


def test_momentum_descends_quadratic():
    state = scalar_state(5.0)
    losses = []
    for _ in range(100):
        theta = state.params[0]["weight"][0]
        losses.append(0.5 * theta ** 2)
        sgd_momentum_step(state, [{"weight": np.array([theta])}], 0.01, 0.9)
    assert min(losses[1:]) < losses[0]


def test_proximal_step_is_stable_for_stiff_entries():
    state = scalar_state(1.0)
    zero = [{"weight": np.zeros(1)}]
    anchor = [{"weight": np.zeros(1)}]
    for _ in range(50):
        sgd_momentum_step(state, zero, 0.1, 0.99, proximal=([{"weight": np.array([1e9])}], anchor))
    assert 0.0 <= state.params[0]["weight"][0] < 1e-12
    assert not state.momentum[0]["weight"].any()


def test_proximal_step_with_zero_stiffness_is_plain_momentum():
    plain, pulled = scalar_state(0.3), scalar_state(0.3)
    grads = [{"weight": np.array([0.7])}]
    for _ in range(5):
        sgd_momentum_step(plain, grads, 0.1, 0.9)
        sgd_momentum_step(pulled, grads, 0.1, 0.9, proximal=([{"weight": np.zeros(1)}], [{"weight": np.ones(1)}]))
    assert pulled.params[0]["weight"][0] == plain.params[0]["weight"][0]


def test_proximal_step_validation():
    state = scalar_state(2.0)
    zero = [{"weight": np.zeros(1)}]
    with pytest.raises(ValueError):
        sgd_momentum_step(state, zero, 0.1, proximal=([{"weight": np.array([-1.0])}], zero))
    with pytest.raises(ShapeError):
        sgd_momentum_step(state, zero, 0.1, proximal=([{"weight": np.ones(2)}], zero))
    assert state.params[0]["weight"][0] == 2.0 and state.step == 0


def test_accuracy_and_predict():
    spec = NetworkSpec((4,), (FullyConnected(4, 3), SoftmaxReadout(3)))
    state = init_network(spec, seed=0)
    state.params[0]["weight"][:] = 0.0
    state.params[0]["bias"][:] = np.array([1.0, 0.0, 0.0], dtype=np.float32)

    class Samples:
        images = np.ones((5, 4), dtype=np.float32)
        labels = np.zeros(5, dtype=np.int64)

    assert predict(state, Samples.images).tolist() == [0] * 5
    assert accuracy(state, Samples) == 1.0

    class Empty:
        images = np.zeros((0, 4))
        labels = np.zeros(0)

    with pytest.raises(ValueError):
        accuracy(state, Empty)


def test_untrained_network_is_near_chance(mnist_splits):
    _, test = mnist_splits
    spec = NetworkSpec((784,), (FullyConnected(784, 50), ReLU(), FullyConnected(50, 10), SoftmaxReadout(10)))
    accs = [accuracy(init_network(spec, seed=s), test) for s in range(5)]
    assert 0.0 <= np.mean(accs) <= 0.3


def test_restore_and_copy_are_independent():
    spec = NetworkSpec((3,), (FullyConnected(3, 2), SoftmaxReadout(2)))
    state = init_network(spec, seed=0)
    state.momentum[0]["weight"][:] = 1.0
    clone = copy_network(state, reset_momentum=True)
    assert clone.uid != state.uid and not clone.momentum[0]["weight"].any()
    clone.params[0]["weight"][:] = 0.0
    assert state.params[0]["weight"].any()
    restored = restore_network(spec, state.params)
    assert np.array_equal(restored.params[0]["weight"], state.params[0]["weight"])
    with pytest.raises(SpecError):
        restore_network(spec, [{"weight": np.zeros((2, 2)), "bias": np.zeros(2)}, {}])
