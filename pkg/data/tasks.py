"""Class-incremental task construction from MNIST."""
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from data.labeled_set import NUM_CLASSES, LabeledSet
from utils.errors import UnknownPresetError
from utils.logging_config import logger

CLASS_SPLIT = "class_split"
PERMUTATION = "permutation"

PERMUTATION_PRESET = "DP10-10"

# (D1 classes, D2 classes) per preset
SPLIT_PRESETS: Dict[str, Tuple[Tuple[int, ...], Tuple[int, ...]]] = {
    "D5-5a": ((0, 1, 2, 3, 4), (5, 6, 7, 8, 9)),
    "D5-5b": ((0, 2, 4, 6, 8), (1, 3, 5, 7, 9)),
    "D5-5c": ((3, 4, 6, 8, 9), (0, 1, 2, 5, 7)),
    "D5-5d": ((0, 2, 5, 6, 7), (1, 3, 4, 8, 9)),
    "D5-5e": ((0, 1, 3, 4, 5), (2, 6, 7, 8, 9)),
    "D5-5f": ((0, 3, 4, 8, 9), (1, 2, 5, 6, 7)),
    "D5-5g": ((0, 5, 6, 7, 8), (1, 2, 3, 4, 9)),
    "D5-5h": ((0, 2, 3, 6, 8), (1, 4, 5, 7, 9)),
    "D9-1a": ((0, 1, 2, 3, 4, 5, 6, 7, 8), (9,)),
    "D9-1b": ((1, 2, 3, 4, 5, 6, 7, 8, 9), (0,)),
    "D9-1c": ((0, 2, 3, 4, 5, 6, 7, 8, 9), (1,)),
}

TASK_PRESETS: Tuple[str, ...] = tuple(SPLIT_PRESETS) + (PERMUTATION_PRESET,)


@dataclass(frozen=True)
class TaskSpec:
    """A (D1, D2) pair with train/test splits and the union test set."""
    name: str
    kind: str
    d1_classes: Tuple[int, ...]
    d2_classes: Tuple[int, ...]
    d1_train: Any
    d1_test: Any
    d2_train: LabeledSet
    d2_test: LabeledSet
    union_test: LabeledSet
    d1_perm: Optional[np.ndarray] = field(default=None, repr=False)
    d2_perm: Optional[np.ndarray] = field(default=None, repr=False)
    seed: Optional[int] = None
    permute_d1: bool = False

    def identity(self) -> Dict[str, Any]:
        """Canonical description used in run identities."""
        ident = {"name": self.name, "kind": self.kind}
        if self.kind == PERMUTATION:
            ident["seed"] = self.seed
            ident["permute_d1"] = self.permute_d1
        return ident

    @property
    def all_classes(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.d1_classes) | set(self.d2_classes)))


def unknown_preset(name: str) -> UnknownPresetError:
    return UnknownPresetError(f"Unknown task preset '{name}'. Valid presets: {', '.join(TASK_PRESETS)}")


def make_split_task(name: str, train: LabeledSet, test: LabeledSet) -> TaskSpec:
    """
    Build a class-split task (D5-5a..h, D9-1a..c).

    Networks always keep a 10-way readout; classes absent from a sub-task
    simply never appear in it.

    Raises:
        UnknownPresetError: If ``name`` is not a class-split preset
    """
    if name not in SPLIT_PRESETS:
        raise unknown_preset(name)
    d1_classes, d2_classes = SPLIT_PRESETS[name]
    d1_test = test.with_classes(d1_classes)
    d2_test = test.with_classes(d2_classes)
    task = TaskSpec(
        name=name,
        kind=CLASS_SPLIT,
        d1_classes=d1_classes,
        d2_classes=d2_classes,
        d1_train=train.with_classes(d1_classes),
        d1_test=d1_test,
        d2_train=train.with_classes(d2_classes),
        d2_test=d2_test,
        union_test=LabeledSet.concatenate(d1_test, d2_test),
    )
    logger.info(
        f"Task {name}: D1 classes {d1_classes} ({len(task.d1_train)} train), "
        f"D2 classes {d2_classes} ({len(task.d2_train)} train)"
    )
    return task


def permute_pixels(labeled_set: LabeledSet, perm: np.ndarray) -> LabeledSet:
    """Apply one pixel permutation to every image of the set."""
    images = np.asarray(labeled_set.images)
    n = images.shape[0]
    flat = images.reshape(n, -1)[:, perm]
    return LabeledSet(flat.reshape(images.shape), labeled_set.labels)


def make_permutation_task(
    seed: int,
    train: LabeledSet,
    test: LabeledSet,
    permute_d1: bool = False
) -> TaskSpec:
    """
    Build DP10-10: D1 and D2 hold all ten classes, D2 pixels are permuted.

    Args:
        seed: Seed of the D2 permutation
        train: Full MNIST train split
        test: Full MNIST test split
        permute_d1: Also permute D1 with its own independent permutation

    Returns:
        TaskSpec whose union test set holds both permuted test splits
    """
    num_pixels = int(np.prod(np.asarray(train.images).shape[1:]))
    rng = np.random.default_rng(seed)
    d2_perm = rng.permutation(num_pixels)
    d1_perm = rng.permutation(num_pixels) if permute_d1 else np.arange(num_pixels)
    d1_perm.flags.writeable = False
    d2_perm.flags.writeable = False

    if permute_d1:
        d1_train, d1_test = permute_pixels(train, d1_perm), permute_pixels(test, d1_perm)
    else:
        d1_train, d1_test = train, test
    d2_train, d2_test = permute_pixels(train, d2_perm), permute_pixels(test, d2_perm)
    all_classes = tuple(range(NUM_CLASSES))
    logger.info(f"Task {PERMUTATION_PRESET}: seed {seed}, permute_d1={permute_d1}")
    return TaskSpec(
        name=PERMUTATION_PRESET,
        kind=PERMUTATION,
        d1_classes=all_classes,
        d2_classes=all_classes,
        d1_train=d1_train,
        d1_test=d1_test,
        d2_train=d2_train,
        d2_test=d2_test,
        union_test=LabeledSet.concatenate(d1_test, d2_test),
        d1_perm=d1_perm,
        d2_perm=d2_perm,
        seed=seed,
        permute_d1=permute_d1,
    )


def build_task(
    name: str,
    train: LabeledSet,
    test: LabeledSet,
    seed: int = 0,
    permute_d1: bool = False
) -> TaskSpec:
    """
    Build any preset by name.

    Raises:
        UnknownPresetError: If ``name`` is not one of TASK_PRESETS
    """
    if name == PERMUTATION_PRESET:
        return make_permutation_task(seed, train, test, permute_d1=permute_d1)
    return make_split_task(name, train, test)
