"""Classical momentum SGD."""
from typing import Optional, Tuple

import numpy as np

from nn_core.network import Gradients, NetworkState, Params
from utils.config import Config
from utils.errors import NumericError, ShapeError


def _check_mirrors(state: NetworkState, other: Params, what: str):
    if len(other) != len(state.params):
        raise ShapeError(f"{len(other)} {what} layers for {len(state.params)} parameter layers")
    for index, layer_params in enumerate(state.params):
        if set(other[index]) != set(layer_params):
            raise ShapeError(f"Layer {index}: {what} for {sorted(other[index])}, parameters {sorted(layer_params)}")
        for name, value in layer_params.items():
            entry = other[index][name]
            if entry.shape != value.shape:
                raise ShapeError(f"Layer {index} {name}: {what} {entry.shape} != parameter {value.shape}")
            if not np.all(np.isfinite(entry)):
                raise NumericError(f"Non-finite {what} in layer {index} ({name}) at step {state.step}")


def sgd_momentum_step(
    state: NetworkState,
    grads: Gradients,
    learning_rate: float,
    momentum: float = Config.MOMENTUM,
    proximal: Optional[Tuple[Params, Params]] = None
) -> NetworkState:
    """
    Apply one momentum update in place: v <- mu*v + g; theta <- theta - lr*v.

    With ``proximal = (stiffness, anchor)`` a quadratic pull
    (k/2)(theta - anchor)^2 is then solved implicitly per entry:
    theta <- (theta + lr*k*anchor) / (1 + lr*k). The pull never enters the
    momentum buffer, so the step is stable however large k gets, and k = 0
    leaves theta bit-for-bit unchanged.

    Args:
        state: Network to update (mutated and returned)
        grads: Gradients mirroring ``state.params``
        learning_rate: Step size, must be positive
        momentum: Momentum coefficient mu
        proximal: Optional non-negative stiffness and anchor, both mirroring ``state.params``

    Returns:
        The updated state

    Raises:
        ValueError: If the learning rate is not positive or a stiffness is negative
        ShapeError: If gradient or proximal shapes do not match the parameters
        NumericError: If any gradient or proximal entry is NaN or infinite
    """
    if learning_rate <= 0:
        raise ValueError(f"Learning rate must be positive, got {learning_rate}")

    # Validate everything before touching the state
    _check_mirrors(state, grads, "gradient")
    if proximal is not None:
        stiffness, anchor = proximal
        _check_mirrors(state, stiffness, "stiffness")
        _check_mirrors(state, anchor, "anchor")
        if any(np.any(k < 0) for layer in stiffness for k in layer.values()):
            raise ValueError("Proximal stiffness must be non-negative")

    dtype = state.dtype
    mu = dtype.type(momentum)
    lr = dtype.type(learning_rate)
    for index, layer_params in enumerate(state.params):
        for name, value in layer_params.items():
            velocity = state.momentum[index][name]
            velocity *= mu
            velocity += grads[index][name].astype(dtype, copy=False)
            value -= lr * velocity
            if proximal is not None:
                pull = learning_rate * np.asarray(stiffness[index][name], dtype=np.float64)
                target = np.asarray(anchor[index][name], dtype=np.float64)
                value[...] = ((value.astype(np.float64) + pull * target) / (1.0 + pull)).astype(dtype)
    state.step += 1
    return state
