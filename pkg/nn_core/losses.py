"""Softmax helpers and the cross-entropy loss."""
from typing import Tuple

import numpy as np

from nn_core.network import Tensor
from utils.errors import ShapeError


def log_softmax(logits: Tensor) -> Tensor:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits: Tensor) -> Tensor:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def cross_entropy_loss(logits: Tensor, labels) -> Tuple[float, Tensor]:
    """
    Mean cross-entropy of softmax(logits) against integer labels.

    Args:
        logits: Array of shape [batch, num_classes]
        labels: Class indices, one per row

    Returns:
        (loss, gradient w.r.t. the logits) where the gradient is
        (softmax - one_hot) / batch_size

    Raises:
        ShapeError: If logits are not 2-D or label count differs from batch size
        ValueError: If a label lies outside [0, num_classes)
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if logits.ndim != 2:
        raise ShapeError(f"Logits must be [batch, classes], got shape {logits.shape}")
    n, num_classes = logits.shape
    if labels.shape[0] != n:
        raise ShapeError(f"{labels.shape[0]} labels for a batch of {n}")
    if n and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"Labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]")

    log_probs = log_softmax(logits)
    rows = np.arange(n)
    loss = float(-log_probs[rows, labels].mean())
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= n
    return max(loss, 0.0), grad
