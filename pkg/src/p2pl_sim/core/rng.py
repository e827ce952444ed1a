#!/usr/bin/env python3
"""Labeled random streams derived from a single master seed."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

# Purpose labels used across the simulator.
INIT = "init"
BATCHES = "batches"
PARTITION = "partition"
CHANNEL = "channel"


def label_hash(label: str) -> int:
    """Stable 32-bit integer for a purpose label (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


@dataclass(frozen=True)
class StreamFactory:
    """Fans a master seed out into independent generators.

    A stream is identified by ``(label, *ids)``. Adding a new label or a new
    device id never changes the numbers drawn by an existing stream.
    """

    master_seed: int

    def stream(self, label: str, *ids: int) -> np.random.Generator:
        entropy = [int(self.master_seed), label_hash(label), *(int(i) for i in ids)]
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def device_stream(self, label: str, device_id: int) -> np.random.Generator:
        return self.stream(label, device_id)
