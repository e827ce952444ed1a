#!/usr/bin/env python3
"""Baselines sharing the P2PL machinery: FedAvg, centralized training and CFA."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Iterator

import numpy as np

from core.mixing import MixingKind, MixingScheme, StepSizeKind, StepSizeSchedule
from core.model import ModelParams, OptimizerState, combine, init_params, param_norm
from core.rng import BATCHES, INIT

from .base import AlgorithmKind, DeviceState, RoundSnapshot, SimulationSetup, TrainingAlgorithm
from .p2pl import P2PLAlgorithm
from .phases import consensus_phase, train_all, train_phase

logger = logging.getLogger(__name__)


class FedAvgAlgorithm(TrainingAlgorithm):
    """Full participation; devices keep their own velocities, the server holds no data."""

    kind = AlgorithmKind.FEDAVG

    def __init__(self, setup: SimulationSetup) -> None:
        super().__init__(setup)
        self.devices = setup.create_devices()
        # Largest-norm device init, ties to the lowest id: the model max norm sync spreads.
        # With K=1 this is init/0, the same start as centralized training.
        norms = [param_norm(d.params) for d in self.devices]
        start = max(range(len(self.devices)), key=lambda i: (norms[i], -i))
        self.global_params = self.devices[start].params.copy()

    def initialize(self) -> None:
        logger.info("FedAvg: broadcasting global model to %d devices", len(self.devices))

    def run_round(self, t: int) -> None:
        for device in self.devices:
            device.params = self.global_params.copy()
        s = self.setup
        train_all(self.devices, s.train, s.hyperparams, s.reshuffle_each_epoch, s.workers)
        total = sum(d.n_k for d in self.devices)
        self.global_params = combine([(d.n_k / total, d.params) for d in self.devices if d.n_k])

    def models(self) -> list[ModelParams]:
        return [self.global_params] * len(self.devices)

    def dataset_sizes(self) -> list[int]:
        return [d.n_k for d in self.devices]


class CentralizedAlgorithm(TrainingAlgorithm):
    """Single model; one round is one epoch over every assigned training sample."""

    kind = AlgorithmKind.CENTRALIZED

    def __init__(self, setup: SimulationSetup) -> None:
        super().__init__(setup)
        all_indices = np.concatenate(setup.partition.indices).astype(np.int64)
        self.device = DeviceState(
            id=0,
            params=init_params(setup.streams.device_stream(INIT, 0), setup.sizes),
            optimizer=OptimizerState.initial(setup.sizes),
            local_data=all_indices,
            rng=setup.streams.device_stream(BATCHES, 0),
        )

    def initialize(self) -> None:
        logger.info("Centralized: %d training samples", self.device.n_k)

    def run_round(self, t: int) -> None:
        train_phase(self.device, self.setup.train, self.setup.hyperparams, self.setup.reshuffle_each_epoch)

    def models(self) -> list[ModelParams]:
        return [self.device.params]

    def dataset_sizes(self) -> list[int]:
        return [self.device.n_k]


class CFAAlgorithm(P2PLAlgorithm):
    """Modified CFA: consensus before training, dataset-size weights, CFA step size.

    Without momentum the local optimizer is plain mini-batch GD.
    """

    def __init__(self, setup: SimulationSetup, with_momentum: bool) -> None:
        hp = setup.hyperparams if with_momentum else replace(setup.hyperparams, momentum=0.0)
        cfa_setup = replace(
            setup,
            hyperparams=hp,
            mixing=MixingScheme(MixingKind.DATASET_SIZE),
            schedule=StepSizeSchedule(StepSizeKind.CFA_FORMULA),
            success_prob=1.0,
        )
        super().__init__(cfa_setup, synchronize=False)
        self.kind = AlgorithmKind.CFA_MOMENTUM if with_momentum else AlgorithmKind.CFA

    def initialize(self) -> None:
        logger.info("CFA: no synchronization; consensus precedes training")

    def run_round(self, t: int) -> None:
        s = self.setup
        consensus_phase(self.devices, s.graph, s.mixing, s.schedule, None, t)
        train_all(self.devices, s.train, s.hyperparams, s.reshuffle_each_epoch, s.workers)


def run_fedavg(setup: SimulationSetup) -> Iterator[RoundSnapshot]:
    return FedAvgAlgorithm(setup).rounds()


def run_centralized(setup: SimulationSetup) -> Iterator[RoundSnapshot]:
    return CentralizedAlgorithm(setup).rounds()


def run_cfa(setup: SimulationSetup, with_momentum: bool) -> Iterator[RoundSnapshot]:
    return CFAAlgorithm(setup, with_momentum).rounds()


def make_algorithm(kind: AlgorithmKind, setup: SimulationSetup) -> TrainingAlgorithm:
    if kind is AlgorithmKind.P2PL:
        return P2PLAlgorithm(setup, synchronize=True)
    if kind is AlgorithmKind.P2PL_NO_SYNC:
        return P2PLAlgorithm(setup, synchronize=False)
    if kind is AlgorithmKind.FEDAVG:
        return FedAvgAlgorithm(setup)
    if kind is AlgorithmKind.CENTRALIZED:
        return CentralizedAlgorithm(setup)
    return CFAAlgorithm(setup, with_momentum=kind is AlgorithmKind.CFA_MOMENTUM)
