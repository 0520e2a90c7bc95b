"""Minibatch streams."""
from typing import Iterator, Tuple

import numpy as np

Batch = Tuple[np.ndarray, np.ndarray]


def batch_stream(labeled_set, batch_size: int, seed: int) -> Iterator[Batch]:
    """
    Endless stream of (images, labels) minibatches.

    Every epoch is a fresh permutation of the set cut into full batches; a
    remainder smaller than ``batch_size`` is skipped for that epoch.

    Raises:
        ValueError: If the set is empty or smaller than one batch
    """
    size = len(labeled_set)
    if size == 0:
        raise ValueError("Cannot stream batches from an empty set")
    if batch_size <= 0 or batch_size > size:
        raise ValueError(f"Batch size {batch_size} must lie in [1, {size}]")
    images = labeled_set.images
    labels = labeled_set.labels
    return _stream(images, labels, batch_size, np.random.default_rng(seed))


def _stream(images, labels, batch_size, rng) -> Iterator[Batch]:
    size = labels.shape[0]
    per_epoch = size // batch_size
    while True:
        order = rng.permutation(size)
        for b in range(per_epoch):
            idx = order[b * batch_size:(b + 1) * batch_size]
            yield images[idx], labels[idx]
