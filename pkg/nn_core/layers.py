"""Layer kinds of the feed-forward engine.

Every layer is a frozen dataclass describing its configuration. The same
object knows how to infer its output shape, which parameters it owns, and how
to run its forward and backward pass on a batch. Shapes handed to
``output_shape``/``param_shapes`` are per-sample shapes (no batch axis).
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from utils.errors import ShapeError, SpecError

Shape = Tuple[int, ...]
LayerParams = Dict[str, np.ndarray]


class LayerBase(ABC):
    """Abstract base class for all layer kinds."""

    @property
    @abstractmethod
    def kind(self) -> str:
        """Short layer name used in logs and structure strings."""
        pass

    @abstractmethod
    def output_shape(self, in_shape: Shape) -> Shape:
        """
        Infer the per-sample output shape.

        Raises:
            SpecError: If the layer cannot consume ``in_shape``
        """
        pass

    @abstractmethod
    def forward(
        self,
        params: LayerParams,
        x: np.ndarray,
        train: bool,
        rng: np.random.Generator
    ) -> Tuple[np.ndarray, Any]:
        """Run the layer on a batch; returns the output and a backward cache."""
        pass

    @abstractmethod
    def backward(
        self,
        params: LayerParams,
        cache: Any,
        dy: np.ndarray
    ) -> Tuple[np.ndarray, LayerParams]:
        """Propagate ``dy`` to the input; returns (dx, parameter gradients)."""
        pass

    def param_shapes(self, in_shape: Shape) -> Dict[str, Shape]:
        """Shapes of trainable tensors owned by the layer (none by default)."""
        return {}

    def fan_in(self, in_shape: Shape) -> int:
        """Number of inputs feeding one output unit."""
        return int(np.prod(in_shape))


@dataclass(frozen=True)
class FullyConnected(LayerBase):
    in_dim: int
    out_dim: int

    @property
    def kind(self) -> str:
        return "FC"

    def output_shape(self, in_shape: Shape) -> Shape:
        flat = int(np.prod(in_shape))
        if flat != self.in_dim:
            raise SpecError(
                f"FC expects {self.in_dim} inputs but receives {flat} (shape {in_shape})"
            )
        if self.out_dim <= 0:
            raise SpecError(f"FC output dimension must be positive, got {self.out_dim}")
        return (self.out_dim,)

    def param_shapes(self, in_shape: Shape) -> Dict[str, Shape]:
        return {"weight": (self.in_dim, self.out_dim), "bias": (self.out_dim,)}

    def forward(self, params, x, train, rng):
        x2 = x.reshape(x.shape[0], -1)
        y = x2 @ params["weight"] + params["bias"]
        return y, (x2, x.shape)

    def backward(self, params, cache, dy):
        x2, x_shape = cache
        grads = {"weight": x2.T @ dy, "bias": dy.sum(axis=0)}
        dx = (dy @ params["weight"].T).reshape(x_shape)
        return dx, grads


@dataclass(frozen=True)
class Conv(LayerBase):
    num_filters: int
    kernel_size: int
    stride: int = 1
    padding: int = 0

    @property
    def kind(self) -> str:
        return "C"

    def output_shape(self, in_shape: Shape) -> Shape:
        if len(in_shape) != 3:
            raise SpecError(f"Conv expects (channels, height, width) input, got {in_shape}")
        if self.stride < 1 or self.padding < 0 or self.kernel_size < 1:
            raise SpecError(f"Invalid conv geometry: {self}")
        _, h, w = in_shape
        out_h = (h + 2 * self.padding - self.kernel_size) // self.stride + 1
        out_w = (w + 2 * self.padding - self.kernel_size) // self.stride + 1
        if out_h <= 0 or out_w <= 0:
            raise SpecError(f"Conv output would be empty for input {in_shape}")
        return (self.num_filters, out_h, out_w)

    def param_shapes(self, in_shape: Shape) -> Dict[str, Shape]:
        k = self.kernel_size
        return {"weight": (self.num_filters, in_shape[0], k, k), "bias": (self.num_filters,)}

    def fan_in(self, in_shape: Shape) -> int:
        return in_shape[0] * self.kernel_size * self.kernel_size

    def forward(self, params, x, train, rng):
        n, c = x.shape[:2]
        k, s, p = self.kernel_size, self.stride, self.padding
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        out_h, out_w = windows.shape[2], windows.shape[3]
        # im2col: one row per output position, columns ordered (channel, ky, kx)
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * k * k)
        w_mat = params["weight"].reshape(self.num_filters, -1)
        y = cols @ w_mat.T + params["bias"]
        y = y.reshape(n, out_h, out_w, self.num_filters).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(y), (cols, x.shape, xp.shape)

    def backward(self, params, cache, dy):
        cols, x_shape, xp_shape = cache
        n, c, h, w = x_shape
        k, s, p = self.kernel_size, self.stride, self.padding
        out_h, out_w = dy.shape[2], dy.shape[3]
        d2 = dy.transpose(0, 2, 3, 1).reshape(-1, self.num_filters)
        w_mat = params["weight"].reshape(self.num_filters, -1)
        grads = {
            "weight": (d2.T @ cols).reshape(params["weight"].shape),
            "bias": d2.sum(axis=0),
        }
        dcols = (d2 @ w_mat).reshape(n, out_h, out_w, c, k, k)
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + s * (out_h - 1) + 1:s, j:j + s * (out_w - 1) + 1:s] += (
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        dx = dxp[:, :, p:p + h, p:p + w] if p else dxp
        return dx, grads


@dataclass(frozen=True)
class MaxPool(LayerBase):
    window: int = 2

    @property
    def kind(self) -> str:
        return "MP"

    def output_shape(self, in_shape: Shape) -> Shape:
        if len(in_shape) != 3:
            raise SpecError(f"MaxPool expects (channels, height, width) input, got {in_shape}")
        c, h, w = in_shape
        if self.window < 1 or h % self.window or w % self.window:
            raise SpecError(f"MaxPool window {self.window} does not tile input {in_shape}")
        return (c, h // self.window, w // self.window)

    def forward(self, params, x, train, rng):
        n, c, h, w = x.shape
        m = self.window
        blocks = (
            x.reshape(n, c, h // m, m, w // m, m)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h // m, w // m, m * m)
        )
        # argmax keeps the lowest index on ties
        argmax = blocks.argmax(axis=-1)
        y = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
        return y, (argmax, x.shape)

    def backward(self, params, cache, dy):
        argmax, x_shape = cache
        n, c, h, w = x_shape
        m = self.window
        blocks = np.zeros((n, c, h // m, w // m, m * m), dtype=dy.dtype)
        np.put_along_axis(blocks, argmax[..., None], dy[..., None], axis=-1)
        dx = (
            blocks.reshape(n, c, h // m, w // m, m, m)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(x_shape)
        )
        return dx, {}


@dataclass(frozen=True)
class ReLU(LayerBase):

    @property
    def kind(self) -> str:
        return "ReLU"

    def output_shape(self, in_shape: Shape) -> Shape:
        return in_shape

    def forward(self, params, x, train, rng):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, dy):
        return dy * cache, {}


@dataclass(frozen=True)
class Dropout(LayerBase):
    """Inverted dropout: survivors are scaled by 1/(1-rate) at train time."""
    rate: float

    @property
    def kind(self) -> str:
        return "D"

    def output_shape(self, in_shape: Shape) -> Shape:
        if not 0.0 < self.rate < 1.0:
            raise SpecError(f"Dropout rate must lie strictly in (0, 1), got {self.rate}")
        return in_shape

    def forward(self, params, x, train, rng):
        if not train:
            return x, None
        keep = rng.random(x.shape) >= self.rate
        mask = keep.astype(x.dtype) / x.dtype.type(1.0 - self.rate)
        return x * mask, mask

    def backward(self, params, cache, dy):
        if cache is None:
            return dy, {}
        return dy * cache, {}


@dataclass(frozen=True)
class LWTA(LayerBase):
    """Local winner-takes-all over consecutive blocks of ``block_size`` units."""
    block_size: int = 2

    @property
    def kind(self) -> str:
        return "LWTA"

    def output_shape(self, in_shape: Shape) -> Shape:
        if self.block_size < 2:
            raise SpecError(f"LWTA block size must be at least 2, got {self.block_size}")
        if len(in_shape) != 1 or in_shape[0] % self.block_size:
            raise SpecError(
                f"LWTA input {in_shape} is not a flat layer divisible by {self.block_size}"
            )
        return in_shape

    def forward(self, params, x, train, rng):
        n, d = x.shape
        blocks = x.reshape(n, d // self.block_size, self.block_size)
        winners = blocks.argmax(axis=-1)
        mask = np.zeros(blocks.shape, dtype=bool)
        np.put_along_axis(mask, winners[..., None], True, axis=-1)
        y = np.where(mask, blocks, 0).astype(x.dtype, copy=False).reshape(n, d)
        return y, (mask.reshape(n, d), winners)

    def backward(self, params, cache, dy):
        mask, _ = cache
        return dy * mask, {}


@dataclass(frozen=True)
class SoftmaxReadout(LayerBase):
    """Terminal marker: the incoming activations are the logits."""
    num_classes: int

    @property
    def kind(self) -> str:
        return "SM"

    def output_shape(self, in_shape: Shape) -> Shape:
        if in_shape != (self.num_classes,):
            raise SpecError(
                f"Softmax readout expects {self.num_classes} logits, receives shape {in_shape}"
            )
        return in_shape

    def forward(self, params, x, train, rng):
        return x, None

    def backward(self, params, cache, dy):
        return dy, {}


def describe(layers) -> str:
    """Structure string such as ``In-FC-D-ReLU-FC-SM``."""
    return "-".join(["In"] + [layer.kind for layer in layers])


def check_batch(x: np.ndarray, in_shape: Shape) -> np.ndarray:
    """
    Bring a batch into ``(n, *in_shape)`` form.

    Batches whose trailing axes hold the right number of values are reshaped,
    so 28x28 images feed a flat 784-unit input directly.

    Raises:
        ShapeError: If the per-sample size does not match
    """
    if x.ndim < 1 or x.shape[0] == 0:
        raise ShapeError(f"Batch must contain at least one sample, got shape {x.shape}")
    if tuple(x.shape[1:]) == tuple(in_shape):
        return x
    per_sample = int(np.prod(x.shape[1:])) if x.ndim > 1 else 1
    if per_sample != int(np.prod(in_shape)):
        raise ShapeError(f"Batch shape {x.shape} does not match network input {in_shape}")
    return x.reshape((x.shape[0],) + tuple(in_shape))
