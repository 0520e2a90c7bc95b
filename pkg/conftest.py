"""Shared pytest fixtures: synthetic MNIST-shaped data and tiny schedules."""
import os

import numpy as np
import pytest

from data.idx import CANONICAL_FILES, write_idx
from data.labeled_set import LabeledSet
from protocols.hyperparams import GridOverrides
from protocols.training import TrainingSettings


def synthetic_digits(per_class: int, seed: int) -> LabeledSet:
    """
    28x28 byte-valued images whose class is a bright horizontal band.

    Class ``c`` lights rows 2c+3 and 2c+4 on a faint noise background, so
    small networks separate the classes within a few dozen iterations.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(10), per_class)
    rng.shuffle(labels)
    pixels = rng.integers(0, 40, size=(labels.size, 28, 28))
    for index, label in enumerate(labels):
        pixels[index, 2 * label + 3:2 * label + 5, 4:24] = rng.integers(200, 256, size=(2, 20))
    return LabeledSet(pixels.astype(np.float32) / np.float32(255.0), labels)


@pytest.fixture(scope="session")
def mnist_splits():
    """(train, test) with 40 train and 12 test images per class."""
    return synthetic_digits(40, seed=11), synthetic_digits(12, seed=12)


@pytest.fixture
def mnist_dir(tmp_path, mnist_splits):
    """Directory holding the synthetic splits as the four canonical IDX files."""
    train, test = mnist_splits
    data_dir = tmp_path / "mnist"
    data_dir.mkdir()
    write_idx(train, data_dir / CANONICAL_FILES["train_images"][0], data_dir / CANONICAL_FILES["train_labels"][0])
    write_idx(test, data_dir / CANONICAL_FILES["test_images"][0], data_dir / CANONICAL_FILES["test_labels"][0])
    return data_dir


@pytest.fixture
def tiny_settings():
    return TrainingSettings(t_max=30, batch_size=10, eval_every=10, fisher_samples=20)


@pytest.fixture
def tiny_grid():
    return GridOverrides(hidden_layers=(1,), layer_sizes=(16,), lr_d1=(0.01, 0.001), lr_d2=(0.001, 0.0001))


@pytest.fixture(scope="session")
def real_mnist_dir():
    """Canonical MNIST directory from FCB_DATA_DIR; acceptance tests skip without it."""
    data_dir = os.getenv("FCB_DATA_DIR")
    if not data_dir:
        pytest.skip("FCB_DATA_DIR not set")
    return data_dir


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size MNIST runs (need FCB_DATA_DIR)")
