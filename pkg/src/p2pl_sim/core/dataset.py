#!/usr/bin/env python3
"""MNIST IDX ingestion and per-device partitioning (IID and label shards)."""

from __future__ import annotations

import gzip
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
NUM_CLASSES = 10

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


class IdxFormatError(ValueError):
    """Malformed IDX container. ``field`` names the offending header field or section."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(message)
        self.field = field


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    pixels: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Images as an (N, 784) float64 array in [0, 1] and integer labels."""

    images: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def __getitem__(self, idx: int) -> Sample:
        return Sample(self.images[idx], int(self.labels[idx]))

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[idx], self.labels[idx])

    def head(self, n: int) -> "Dataset":
        return Dataset(self.images[:n], self.labels[:n])

    def label_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=NUM_CLASSES)


@dataclass(frozen=True, eq=False)
class DevicePartition:
    """Per-device sample index lists D_1..D_K."""

    indices: tuple[np.ndarray, ...]

    @property
    def num_devices(self) -> int:
        return len(self.indices)

    @property
    def sizes(self) -> list[int]:
        return [int(len(idx)) for idx in self.indices]

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def labels_per_device(self, data: Dataset) -> list[set[int]]:
        return [set(np.unique(data.labels[idx]).tolist()) for idx in self.indices]

    def is_disjoint(self) -> bool:
        joined = np.concatenate(self.indices) if self.indices else np.array([], dtype=np.int64)
        return len(np.unique(joined)) == len(joined)


# ── IDX parsing ───────────────────────────────────────────────────────────────

def _read_bytes(path: Path) -> bytes:
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _header(raw: bytes, count: int, kind: str) -> tuple[int, ...]:
    need = 4 * count
    if len(raw) < need:
        raise IdxFormatError(f"{kind} header", f"truncated {kind} header: {len(raw)} of {need} bytes")
    return struct.unpack(f">{count}I", raw[:need])


def parse_idx_images(raw: bytes) -> np.ndarray:
    magic, count, rows, cols = _header(raw, 4, "image")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError("magic", f"bad image magic 0x{magic:08x}")
    expected = count * rows * cols
    body = raw[16:]
    if len(body) < expected:
        raise IdxFormatError("pixels", f"truncated image data: {len(body)} of {expected} bytes")
    pixels = np.frombuffer(body, dtype=np.uint8, count=expected)
    return pixels.reshape(count, rows * cols).astype(np.float64) / 255.0


def parse_idx_labels(raw: bytes) -> np.ndarray:
    magic, count = _header(raw, 2, "label")
    if magic != LABEL_MAGIC:
        raise IdxFormatError("magic", f"bad label magic 0x{magic:08x}")
    body = raw[8:]
    if len(body) < count:
        raise IdxFormatError("labels", f"truncated label data: {len(body)} of {count} bytes")
    labels = np.frombuffer(body, dtype=np.uint8, count=count).astype(np.int64)
    if labels.size and labels.max() >= NUM_CLASSES:
        raise IdxFormatError("labels", f"label value {int(labels.max())} outside 0..{NUM_CLASSES - 1}")
    return labels


def load_idx(images_path: Path, labels_path: Path) -> Dataset:
    """Read an image/label IDX pair (plain or gzip, detected by the .gz extension)."""
    images = parse_idx_images(_read_bytes(Path(images_path)))
    labels = parse_idx_labels(_read_bytes(Path(labels_path)))
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            "count", f"count mismatch: {images.shape[0]} images but {labels.shape[0]} labels"
        )
    logger.info("Loaded %d samples from %s", len(labels), Path(images_path).name)
    return Dataset(images, labels)


def _locate(data_dir: Path, stem: str) -> Path:
    for candidate in (data_dir / stem, data_dir / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"MNIST file {stem}[.gz] not found in {data_dir}")


def load_mnist(data_dir: Path) -> tuple[Dataset, Dataset]:
    """Return (train, test) from the four standard MNIST files."""
    data_dir = Path(data_dir)
    train = load_idx(_locate(data_dir, MNIST_FILES["train_images"]), _locate(data_dir, MNIST_FILES["train_labels"]))
    test = load_idx(_locate(data_dir, MNIST_FILES["test_images"]), _locate(data_dir, MNIST_FILES["test_labels"]))
    return train, test


def mnist_available(data_dir: Path) -> bool:
    try:
        for stem in MNIST_FILES.values():
            _locate(Path(data_dir), stem)
    except FileNotFoundError:
        return False
    return True


# ── Partitioning ──────────────────────────────────────────────────────────────

def partition_iid(data: Dataset, num_devices: int, rng: np.random.Generator) -> DevicePartition:
    """Seeded shuffle, then contiguous splits whose sizes differ by at most one."""
    if num_devices <= 0:
        raise PartitionError(f"number of devices must be positive, got {num_devices}")
    order = rng.permutation(len(data))
    return DevicePartition(tuple(np.array_split(order, num_devices)))


def partition_pathological_noniid(
    data: Dataset,
    num_devices: int,
    shards_per_device: int,
    rng: np.random.Generator,
    *,
    shard_order: Sequence[int] | None = None,
) -> DevicePartition:
    """Sort by label, cut into equal shards and deal ``shards_per_device`` to each device.

    Shards are dealt from one permutation of all shards: consecutive groups go
    to consecutive devices. ``shard_order`` replaces the random permutation.
    """
    if num_devices <= 0 or shards_per_device <= 0:
        raise PartitionError("number of devices and shards per device must be positive")
    num_shards = num_devices * shards_per_device
    if len(data) % num_shards != 0:
        raise PartitionError(f"{len(data)} samples do not divide into {num_shards} equal shards")
    shard_size = len(data) // num_shards

    sorted_idx = np.argsort(data.labels, kind="stable")
    shards = sorted_idx.reshape(num_shards, shard_size)

    if shard_order is None:
        order = rng.permutation(num_shards)
    else:
        order = np.asarray(shard_order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(num_shards)):
            raise PartitionError(f"shard_order must be a permutation of 0..{num_shards - 1}")

    per_device = order.reshape(num_devices, shards_per_device)
    return DevicePartition(tuple(np.concatenate([shards[s] for s in row]) for row in per_device))


def epoch_batches(
    device_indices: np.ndarray,
    batch_size: int,
    rng: np.random.Generator,
    reshuffle: bool = True,
) -> list[np.ndarray]:
    """Cut one epoch of a device's indices into ceil(n_k / B) batches; the last may be short."""
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    order = rng.permutation(device_indices) if reshuffle else np.asarray(device_indices)
    return [order[start:start + batch_size] for start in range(0, len(order), batch_size)]
