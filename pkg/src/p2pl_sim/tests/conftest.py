#!/usr/bin/env python3

from __future__ import annotations

import os
import sys
from pathlib import Path

import numpy as np
import pytest

APP_DIR = Path(__file__).resolve().parents[1]
if str(APP_DIR) not in sys.path:
    sys.path.insert(0, str(APP_DIR))

from config import AppConfig
from core.dataset import Dataset, mnist_available

# Class counts of the MNIST training set.
MNIST_TRAIN_LABEL_COUNTS = [5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949]


def synthetic_dataset(n: int, input_dim: int = 784, seed: int = 0, num_classes: int = 10) -> Dataset:
    rng = np.random.default_rng(seed)
    images = rng.random((n, input_dim))
    labels = rng.integers(0, num_classes, size=n)
    return Dataset(images, labels)


def separable_dataset(n: int, input_dim: int, num_classes: int, seed: int = 0) -> Dataset:
    """Each class lights up its own input coordinate; easy to learn."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, num_classes, size=n)
    images = 0.1 * rng.random((n, input_dim))
    images[np.arange(n), labels % input_dim] += 1.0
    return Dataset(images, labels)


@pytest.fixture
def tiny_mnist_like():
    return synthetic_dataset(240, seed=1), synthetic_dataset(60, seed=2)


@pytest.fixture(scope="session")
def mnist():
    data_dir = AppConfig().data_dir
    if not mnist_available(data_dir):
        pytest.skip(f"MNIST files not found in {data_dir} (set P2PL_DATA_DIR)")
    from core.dataset import load_mnist
    return load_mnist(data_dir)


def slow_enabled() -> bool:
    return os.environ.get("P2PL_RUN_SLOW") == "1"
