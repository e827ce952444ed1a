#!/usr/bin/env python3
"""Shared protocol types and the training-algorithm interface."""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from core.dataset import Dataset, DevicePartition
from core.mixing import MixingScheme, StepSizeSchedule
from core.model import MNIST_2NN, Hyperparams, LayerSizes, ModelParams, OptimizerState, init_params
from core.rng import BATCHES, INIT, StreamFactory
from core.topology import Graph


class AlgorithmKind(str, Enum):
    P2PL = "p2pl"
    P2PL_NO_SYNC = "p2pl_no_sync"
    FEDAVG = "fedavg"
    CENTRALIZED = "centralized"
    CFA = "cfa"
    CFA_MOMENTUM = "cfa_momentum"

    @property
    def is_peer_to_peer(self) -> bool:
        return self in (AlgorithmKind.P2PL, AlgorithmKind.P2PL_NO_SYNC, AlgorithmKind.CFA, AlgorithmKind.CFA_MOMENTUM)


@dataclass(eq=False)
class DeviceState:
    id: int
    params: ModelParams
    optimizer: OptimizerState
    local_data: np.ndarray
    rng: np.random.Generator
    steps_taken: int = 0

    @property
    def n_k(self) -> int:
        return int(len(self.local_data))


@dataclass(eq=False)
class ChannelModel:
    """Independent Bernoulli delivery of every directed neighbor message."""

    success_prob: float = 1.0
    rng: np.random.Generator | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.success_prob <= 1.0:
            raise ValueError(f"channel success probability must be in (0, 1], got {self.success_prob}")
        if self.success_prob < 1.0 and self.rng is None:
            raise ValueError("a lossy channel needs a random stream")

    @property
    def lossless(self) -> bool:
        return self.success_prob >= 1.0

    def deliveries(self, graph: Graph) -> list[list[int]]:
        """For each receiver, the sorted senders whose message arrived this phase."""
        if self.lossless:
            return [list(nbrs) for nbrs in graph.neighbors]
        received: list[list[int]] = [[] for _ in range(graph.num_devices)]
        for sender in range(graph.num_devices):
            for receiver in graph.neighbors[sender]:
                if self.rng.random() < self.success_prob:
                    received[receiver].append(sender)
        return received


@dataclass(eq=False)
class SimulationSetup:
    """Everything an algorithm needs, already loaded and partitioned."""

    train: Dataset
    partition: DevicePartition
    graph: Graph
    streams: StreamFactory
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    mixing: MixingScheme = field(default_factory=MixingScheme)
    schedule: StepSizeSchedule = field(default_factory=StepSizeSchedule)
    success_prob: float = 1.0
    reshuffle_each_epoch: bool = True
    sizes: LayerSizes = MNIST_2NN
    workers: int = 1

    def create_devices(self) -> list[DeviceState]:
        return [
            DeviceState(
                id=k,
                params=init_params(self.streams.device_stream(INIT, k), self.sizes),
                optimizer=OptimizerState.initial(self.sizes),
                local_data=np.asarray(indices, dtype=np.int64),
                rng=self.streams.device_stream(BATCHES, k),
            )
            for k, indices in enumerate(self.partition.indices)
        ]


@dataclass
class RoundSnapshot:
    round: int
    models: list[ModelParams]
    sizes: list[int]


class TrainingAlgorithm(ABC):
    """Interface shared by P2PL and the baselines."""

    kind: AlgorithmKind

    def __init__(self, setup: SimulationSetup) -> None:
        self.setup = setup

    @property
    def label(self) -> str:
        return self.kind.value

    @abstractmethod
    def initialize(self) -> None:
        """Anything that happens before round 1 (e.g. max norm synchronization)."""
        raise NotImplementedError

    @abstractmethod
    def run_round(self, t: int) -> None:
        raise NotImplementedError

    @abstractmethod
    def models(self) -> list[ModelParams]:
        """One parameter set per device, in device order."""
        raise NotImplementedError

    @abstractmethod
    def dataset_sizes(self) -> list[int]:
        raise NotImplementedError

    def rounds(self) -> Iterator[RoundSnapshot]:
        """Initialize, then yield a snapshot after every round, forever."""
        self.initialize()
        for t in itertools.count(1):
            self.run_round(t)
            yield RoundSnapshot(t, self.models(), self.dataset_sizes())
