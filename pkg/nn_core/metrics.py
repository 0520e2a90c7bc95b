"""Classification accuracy."""
from typing import Protocol

import numpy as np

from nn_core.network import Mode, NetworkState, Tensor, forward

EVAL_CHUNK = 1000


class LabeledSamples(Protocol):
    images: Tensor
    labels: Tensor


def predict(state: NetworkState, images: Tensor, chunk_size: int = EVAL_CHUNK) -> Tensor:
    """Argmax class per sample in eval mode; ties go to the lowest index."""
    predictions = []
    for start in range(0, len(images), chunk_size):
        logits, _ = forward(state, images[start:start + chunk_size], Mode.EVAL)
        predictions.append(logits.argmax(axis=1))
    return np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)


def accuracy(state: NetworkState, test_set: LabeledSamples) -> float:
    """
    Fraction of samples whose predicted class equals the label.

    Raises:
        ValueError: If the test set is empty
    """
    labels = np.asarray(test_set.labels)
    if labels.size == 0:
        raise ValueError("Cannot measure accuracy on an empty test set")
    predictions = predict(state, test_set.images)
    return float(np.mean(predictions == labels))
