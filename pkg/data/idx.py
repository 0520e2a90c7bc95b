"""IDX file reading and writing (the MNIST distribution format)."""
import gzip
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from data.labeled_set import LabeledSet
from utils.errors import DatasetFormatError
from utils.logging_config import logger

IMAGES_MAGIC = 2051  # 0x00000803
LABELS_MAGIC = 2049  # 0x00000801

CANONICAL_FILES = {
    "train_images": ("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
    "train_labels": ("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"),
    "test_images": ("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
    "test_labels": ("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"),
}


def _read_bytes(path: Path) -> bytes:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def read_idx(path, expected_magic: int) -> np.ndarray:
    """
    Read an unsigned-byte IDX file.

    Args:
        path: File path (``.gz`` files are decompressed transparently)
        expected_magic: 2051 for images, 2049 for labels

    Returns:
        uint8 array shaped by the header dimensions

    Raises:
        DatasetFormatError: On a wrong magic number or a truncated/oversized payload
    """
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise DatasetFormatError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise DatasetFormatError(f"{path}: magic number {magic}, expected {expected_magic}")
    ndim = magic & 0xFF
    header_size = 4 + 4 * ndim
    if len(raw) < header_size:
        raise DatasetFormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:header_size])
    expected = int(np.prod(dims))
    payload = len(raw) - header_size
    if payload < expected:
        raise DatasetFormatError(f"{path}: truncated, {payload} of {expected} bytes present")
    if payload > expected:
        raise DatasetFormatError(f"{path}: {payload - expected} unexpected trailing bytes")
    return np.frombuffer(raw, dtype=np.uint8, offset=header_size).reshape(dims)


def load_mnist(images_path, labels_path) -> LabeledSet:
    """
    Load one MNIST split.

    Pixels are scaled to [0, 1] by division by 255.

    Raises:
        DatasetFormatError: On bad magic numbers, truncated files or an
            image/label count mismatch
    """
    images = read_idx(images_path, IMAGES_MAGIC)
    labels = read_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DatasetFormatError(
            f"{images.shape[0]} images in {images_path} but {labels.shape[0]} labels in {labels_path}"
        )
    if labels.size and labels.max() > 9:
        raise DatasetFormatError(f"{labels_path}: label {labels.max()} outside 0-9")
    logger.info(f"Loaded {images.shape[0]} images of shape {images.shape[1:]} from {Path(images_path).name}")
    return LabeledSet(images.astype(np.float32) / np.float32(255.0), labels.astype(np.int64))


def write_idx(labeled_set: LabeledSet, images_path, labels_path):
    """Write a LabeledSet as an image/label IDX pair (pixels rounded to bytes)."""
    images = np.asarray(labeled_set.images)
    labels = np.asarray(labeled_set.labels)
    pixels = np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(f">I{images.ndim}I", IMAGES_MAGIC, *images.shape))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def _find_file(data_dir: Path, names) -> Optional[Path]:
    for name in names:
        for candidate in (data_dir / name, data_dir / f"{name}.gz"):
            if candidate.exists():
                return candidate
    return None


def resolve_mnist_files(data_dir) -> Dict[str, Path]:
    """
    Locate the four canonical MNIST files in a directory.

    Raises:
        FileNotFoundError: If any of them is missing
    """
    data_dir = Path(data_dir)
    found, missing = {}, []
    for key, names in CANONICAL_FILES.items():
        path = _find_file(data_dir, names)
        if path is None:
            missing.append(names[0])
        else:
            found[key] = path
    if missing:
        raise FileNotFoundError(f"MNIST files missing in {data_dir}: {', '.join(missing)}")
    return found


def load_mnist_dir(data_dir) -> Tuple[LabeledSet, LabeledSet]:
    """Load (train, test) from a directory holding the canonical files."""
    files = resolve_mnist_files(data_dir)
    train = load_mnist(files["train_images"], files["train_labels"])
    test = load_mnist(files["test_images"], files["test_labels"])
    return train, test


# Per-process cache of loaded MNIST directories
_mnist_cache: Dict[str, Tuple[LabeledSet, LabeledSet]] = {}


def get_mnist(data_dir) -> Tuple[LabeledSet, LabeledSet]:
    """Get or load the MNIST splits of ``data_dir``."""
    key = str(Path(data_dir).resolve())
    if key not in _mnist_cache:
        _mnist_cache[key] = load_mnist_dir(data_dir)
    return _mnist_cache[key]
