"""Labeled image sets and the D1 access guard."""
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict

import numpy as np

from utils.errors import D1AccessError, ShapeError

NUM_CLASSES = 10


@dataclass(frozen=True)
class LabeledSet:
    """Images in [0, 1] with one class index per image."""
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        images = np.asarray(self.images)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if images.shape[0] != labels.shape[0]:
            raise ShapeError(f"{images.shape[0]} images but {labels.shape[0]} labels")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise ValueError("Pixel values must lie in [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() >= NUM_CLASSES):
            raise ValueError(f"Labels must lie in [0, {NUM_CLASSES})")
        images.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, mask_or_indices) -> "LabeledSet":
        selector = np.asarray(mask_or_indices)
        return LabeledSet(self.images[selector], self.labels[selector])

    def with_classes(self, classes) -> "LabeledSet":
        """Samples whose label lies in ``classes``, original order kept."""
        return self.subset(np.isin(self.labels, list(classes)))

    @staticmethod
    def concatenate(first: "LabeledSet", second: "LabeledSet") -> "LabeledSet":
        return LabeledSet(
            np.concatenate([first.images, second.images]),
            np.concatenate([first.labels, second.labels]),
        )


def class_histogram(labeled_set) -> Dict[int, int]:
    """Number of samples per class index present in the set."""
    classes, counts = np.unique(np.asarray(labeled_set.labels), return_counts=True)
    return {int(c): int(n) for c, n in zip(classes, counts)}


class GuardedSet:
    """
    Read guard around a LabeledSet.

    While locked, reading ``images`` or ``labels`` raises D1AccessError and is
    counted as a violation. ``len()`` is always allowed.
    """

    def __init__(self, inner: LabeledSet, name: str = "D1"):
        self._inner = inner
        self.name = name
        self.locked = False
        self.reads = 0
        self.locked_reads = 0
        self.violations = 0

    def _check(self, field: str):
        if self.locked:
            self.violations += 1
            raise D1AccessError(f"{self.name} {field} read while {self.name} is unavailable")
        self.reads += 1

    @property
    def images(self) -> np.ndarray:
        self._check("images")
        return self._inner.images

    @property
    def labels(self) -> np.ndarray:
        self._check("labels")
        return self._inner.labels

    def __len__(self) -> int:
        return len(self._inner)

    def lock(self):
        self.locked = True

    def unlock(self):
        self.locked = False

    @contextmanager
    def unlocked(self):
        """Temporarily lift the lock; reads inside are tallied in ``locked_reads``."""
        was_locked = self.locked
        before = self.reads
        self.locked = False
        try:
            yield self
        finally:
            if was_locked:
                self.locked_reads += self.reads - before
            self.locked = was_locked
