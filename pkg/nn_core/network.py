"""Network topology, parameter state and the forward/backward passes."""
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Tuple

import numpy as np

from nn_core.layers import LayerBase, Shape, SoftmaxReadout, check_batch, describe
from utils.config import Config
from utils.errors import ShapeError, SpecError, StaleTraceError

# Dense n-dimensional numeric array carried through every pass
Tensor = np.ndarray
Params = List[Dict[str, Tensor]]
Gradients = List[Dict[str, Tensor]]


class Mode(str, Enum):
    """Forward pass modes."""
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list plus the per-sample input shape."""
    input_shape: Shape
    layers: Tuple[LayerBase, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))

    def layer_shapes(self) -> List[Shape]:
        """
        Validate the topology and return every layer's input shape.

        Raises:
            SpecError: If the layer list is empty, does not end in a softmax
                readout, or adjacent layers disagree on dimensions
        """
        if not self.layers:
            raise SpecError("Network must contain at least one layer")
        if any(d <= 0 for d in self.input_shape) or not self.input_shape:
            raise SpecError(f"Invalid input shape {self.input_shape}")
        if not isinstance(self.layers[-1], SoftmaxReadout):
            raise SpecError("Network must end with a SoftmaxReadout layer")
        shapes = []
        shape = self.input_shape
        for index, layer in enumerate(self.layers):
            if isinstance(layer, SoftmaxReadout) and index != len(self.layers) - 1:
                raise SpecError("SoftmaxReadout may only appear as the last layer")
            shapes.append(shape)
            try:
                shape = layer.output_shape(shape)
            except SpecError as e:
                raise SpecError(f"Layer {index} ({layer.kind}): {e}") from e
        return shapes

    @property
    def num_classes(self) -> int:
        return self.layers[-1].num_classes

    def describe(self) -> str:
        return describe(self.layers)


@dataclass
class NetworkState:
    """Trainable parameters and momentum buffers of one network."""
    spec: NetworkSpec
    params: Params
    momentum: Params
    layer_shapes: List[Shape]
    step: int = 0
    uid: str = field(default_factory=lambda: uuid.uuid4().hex)

    @property
    def dtype(self) -> np.dtype:
        for layer_params in self.params:
            for value in layer_params.values():
                return value.dtype
        return np.dtype(Config.DTYPE)


@dataclass
class ForwardTrace:
    """Everything the backward pass needs from one forward call."""
    caches: List[Any]
    mode: Mode
    state_uid: str
    state_step: int
    logits_shape: Tuple[int, ...]


def iter_parameters(params: Params) -> Iterator[Tuple[int, str, Tensor]]:
    """Yield (layer index, parameter name, tensor) in a fixed order."""
    for index, layer_params in enumerate(params):
        for name in sorted(layer_params):
            yield index, name, layer_params[name]


def zeros_like_params(params: Params) -> Params:
    return [{name: np.zeros_like(value) for name, value in layer.items()} for layer in params]


def add_gradients(a: Gradients, b: Gradients, scale: float = 1.0) -> Gradients:
    """Elementwise ``a + scale * b`` over matching gradient lists."""
    return [
        {name: value + scale * b[index][name] for name, value in layer.items()}
        for index, layer in enumerate(a)
    ]


def _resolve_dtype(dtype) -> np.dtype:
    resolved = np.dtype(dtype or Config.DTYPE)
    if resolved.name not in Config.SUPPORTED_DTYPES:
        raise SpecError(f"Unsupported dtype {resolved}; use one of {Config.SUPPORTED_DTYPES}")
    return resolved


def init_network(spec: NetworkSpec, seed: int, dtype=None) -> NetworkState:
    """
    Create a freshly initialized network.

    Weights are drawn from N(0, 2/fan_in), biases start at zero and momentum
    buffers are all zero.

    Args:
        spec: Network topology
        seed: Seed of the initialization generator
        dtype: Floating point type (``Config.DTYPE`` if None)

    Returns:
        New NetworkState

    Raises:
        SpecError: If the topology is malformed
    """
    shapes = spec.layer_shapes()
    dtype = _resolve_dtype(dtype)
    rng = np.random.default_rng(seed)
    params: Params = []
    for layer, in_shape in zip(spec.layers, shapes):
        layer_params = {}
        param_shapes = layer.param_shapes(in_shape)
        if "weight" in param_shapes:
            std = np.sqrt(2.0 / layer.fan_in(in_shape))
            layer_params["weight"] = (rng.standard_normal(param_shapes["weight"]) * std).astype(dtype)
        if "bias" in param_shapes:
            layer_params["bias"] = np.zeros(param_shapes["bias"], dtype=dtype)
        params.append(layer_params)
    return NetworkState(
        spec=spec,
        params=params,
        momentum=zeros_like_params(params),
        layer_shapes=shapes,
    )


def restore_network(spec: NetworkSpec, params: Params, dtype=None) -> NetworkState:
    """
    Rebuild a network from a parameter snapshot; momentum starts at zero.

    Raises:
        SpecError: If the snapshot does not match the topology
    """
    shapes = spec.layer_shapes()
    dtype = _resolve_dtype(dtype)
    if len(params) != len(spec.layers):
        raise SpecError(f"Snapshot has {len(params)} layers, topology has {len(spec.layers)}")
    restored: Params = []
    for index, (layer, in_shape) in enumerate(zip(spec.layers, shapes)):
        expected = layer.param_shapes(in_shape)
        given = params[index]
        if set(given) != set(expected):
            raise SpecError(f"Layer {index}: snapshot holds {sorted(given)}, expected {sorted(expected)}")
        layer_params = {}
        for name, shape in expected.items():
            value = np.asarray(given[name])
            if value.shape != tuple(shape):
                raise SpecError(f"Layer {index} {name}: shape {value.shape} != {shape}")
            layer_params[name] = value.astype(dtype, copy=True)
        restored.append(layer_params)
    return NetworkState(spec=spec, params=restored, momentum=zeros_like_params(restored), layer_shapes=shapes)


def copy_network(state: NetworkState, reset_momentum: bool = False) -> NetworkState:
    """Independent deep copy of ``state`` (new identity)."""
    params = [{name: value.copy() for name, value in layer.items()} for layer in state.params]
    if reset_momentum:
        momentum = zeros_like_params(params)
    else:
        momentum = [{name: value.copy() for name, value in layer.items()} for layer in state.momentum]
    return NetworkState(
        spec=state.spec,
        params=params,
        momentum=momentum,
        layer_shapes=list(state.layer_shapes),
        step=state.step,
    )


def forward(
    state: NetworkState,
    batch: Tensor,
    mode: Mode = Mode.EVAL,
    rng_seed: int = 0
) -> Tuple[Tensor, ForwardTrace]:
    """
    Run the network on a batch.

    Args:
        state: Network to evaluate
        batch: Inputs of shape ``(n, *input_shape)`` (or any shape with the
            same number of values per sample)
        mode: ``train`` samples Dropout masks, ``eval`` makes Dropout the identity
        rng_seed: Seed for Dropout sampling (ignored in eval mode)

    Returns:
        (logits of shape [n, num_classes], trace for the backward pass)

    Raises:
        ShapeError: If the batch does not match the input layer
    """
    mode = Mode(mode)
    x = check_batch(np.asarray(batch), state.spec.input_shape).astype(state.dtype, copy=False)
    train = mode is Mode.TRAIN
    rng = np.random.default_rng(rng_seed)
    caches = []
    for layer, layer_params in zip(state.spec.layers, state.params):
        x, cache = layer.forward(layer_params, x, train, rng)
        caches.append(cache)
    trace = ForwardTrace(
        caches=caches,
        mode=mode,
        state_uid=state.uid,
        state_step=state.step,
        logits_shape=tuple(x.shape),
    )
    return x, trace


def backward(state: NetworkState, trace: ForwardTrace, dloss_dlogits: Tensor) -> Gradients:
    """
    Backpropagate the loss gradient through the cached forward pass.

    Returns:
        One gradient tensor per parameter tensor, mirroring ``state.params``

    Raises:
        StaleTraceError: If the trace belongs to another state or an older step
        ShapeError: If the upstream gradient does not match the logits
    """
    if trace.state_uid != state.uid or trace.state_step != state.step:
        raise StaleTraceError(
            f"Trace from state {trace.state_uid[:8]}@{trace.state_step} used with "
            f"state {state.uid[:8]}@{state.step}"
        )
    dy = np.asarray(dloss_dlogits)
    if tuple(dy.shape) != trace.logits_shape:
        raise ShapeError(f"Upstream gradient shape {dy.shape} != logits shape {trace.logits_shape}")
    dy = dy.astype(state.dtype, copy=False)
    grads: Gradients = [dict() for _ in state.params]
    for index in range(len(state.spec.layers) - 1, -1, -1):
        layer = state.spec.layers[index]
        dy, layer_grads = layer.backward(state.params[index], trace.caches[index], dy)
        grads[index] = layer_grads
    return grads

