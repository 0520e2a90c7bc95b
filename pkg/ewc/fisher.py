"""Diagonal Fisher information and the post-D1 anchor."""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from nn_core.losses import softmax
from nn_core.network import Mode, NetworkState, Params, backward, forward
from utils.errors import NumericError, ShapeError
from utils.logging_config import logger


class LabelMode(str, Enum):
    """Where the label of each Fisher sample comes from."""
    SAMPLED = "sampled"  # drawn from the model's own softmax output
    TRUE = "true"
    ARGMAX = "argmax"


def _frozen_copy(params: Params) -> Params:
    copied = []
    for layer in params:
        frozen = {}
        for name, value in layer.items():
            array = np.array(value, copy=True)
            array.flags.writeable = False
            frozen[name] = array
        copied.append(frozen)
    return copied


@dataclass(frozen=True)
class FisherDiag:
    """Non-negative importance weight per parameter entry."""
    values: Params
    n_samples: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_copy(self.values))
        for layer in self.values:
            for name, value in layer.items():
                if np.any(value < 0) or not np.all(np.isfinite(value)):
                    raise NumericError(f"Fisher entries for {name} must be finite and non-negative")

    def total(self) -> float:
        return float(sum(value.sum() for layer in self.values for value in layer.values()))


@dataclass(frozen=True)
class AnchorParams:
    """Read-only copy of the parameters at the end of D1 training."""
    values: Params

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_copy(self.values))

    @classmethod
    def capture(cls, state: NetworkState) -> "AnchorParams":
        return cls(state.params)


def check_alignment(state: NetworkState, other: Params, what: str):
    """
    Raises:
        ShapeError: If ``other`` does not mirror the parameter shapes of ``state``
    """
    if len(other) != len(state.params):
        raise ShapeError(f"{what} has {len(other)} layers, network has {len(state.params)}")
    for index, layer in enumerate(state.params):
        if set(other[index]) != set(layer):
            raise ShapeError(f"{what} layer {index} holds {sorted(other[index])}, expected {sorted(layer)}")
        for name, value in layer.items():
            if other[index][name].shape != value.shape:
                raise ShapeError(
                    f"{what} layer {index} {name}: shape {other[index][name].shape} != {value.shape}"
                )


def estimate_fisher(
    state: NetworkState,
    d1_samples,
    n_samples: int,
    seed: int,
    label_mode: LabelMode = LabelMode.SAMPLED
) -> FisherDiag:
    """
    Estimate the diagonal Fisher information on D1.

    ``F_i`` is the mean over ``n_samples`` single examples of the squared
    gradient of ``log p(y|x)`` with respect to parameter ``i``. Examples are
    drawn uniformly without replacement (with replacement only when more
    samples are requested than exist); Dropout is inactive (eval mode).

    Args:
        state: Trained post-D1 network
        d1_samples: D1 train split (anything with ``images`` and ``labels``)
        n_samples: Number of single-example gradients to average
        seed: Seed for example selection and label sampling
        label_mode: Label source, the model's own softmax by default

    Returns:
        FisherDiag mirroring the parameter shapes

    Raises:
        ValueError: If the sample set is empty or ``n_samples`` is not positive
        NumericError: If a gradient is non-finite
    """
    label_mode = LabelMode(label_mode)
    size = len(d1_samples)
    if size == 0:
        raise ValueError("Cannot estimate Fisher information from an empty sample set")
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")

    images = d1_samples.images
    labels = d1_samples.labels
    rng = np.random.default_rng(seed)
    indices = rng.choice(size, size=n_samples, replace=n_samples > size)

    accum = [{name: np.zeros(value.shape, dtype=np.float64) for name, value in layer.items()} for layer in state.params]
    for index in indices:
        logits, trace = forward(state, images[index:index + 1], Mode.EVAL)
        probs = softmax(logits.astype(np.float64))[0]
        if label_mode is LabelMode.SAMPLED:
            label = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
        elif label_mode is LabelMode.TRUE:
            label = int(labels[index])
        else:
            label = int(np.argmax(probs))
        # d log p(label|x) / d logits = one_hot - softmax
        dlogits = -probs
        dlogits[label] += 1.0
        grads = backward(state, trace, dlogits[None, :])
        for layer_index, layer in enumerate(grads):
            for name, grad in layer.items():
                grad = grad.astype(np.float64)
                if not np.all(np.isfinite(grad)):
                    raise NumericError(f"Non-finite log-likelihood gradient in layer {layer_index} ({name})")
                accum[layer_index][name] += grad * grad

    fisher = [
        {name: (value / n_samples).astype(state.dtype) for name, value in layer.items()}
        for layer in accum
    ]
    result = FisherDiag(values=fisher, n_samples=n_samples)
    logger.info(f"Estimated Fisher diagonal from {n_samples} samples ({label_mode.value} labels), total {result.total():.4g}")
    return result
