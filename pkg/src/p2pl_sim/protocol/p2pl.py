#!/usr/bin/env python3
"""Peer-to-peer learning: optional max norm sync, then train/consensus rounds."""

from __future__ import annotations

import logging
from typing import Iterator

from core.model import ModelParams
from core.rng import CHANNEL

from .base import AlgorithmKind, ChannelModel, RoundSnapshot, SimulationSetup, TrainingAlgorithm
from .phases import consensus_phase, max_norm_sync, train_all

logger = logging.getLogger(__name__)


class P2PLAlgorithm(TrainingAlgorithm):
    def __init__(self, setup: SimulationSetup, synchronize: bool = True) -> None:
        super().__init__(setup)
        self.kind = AlgorithmKind.P2PL if synchronize else AlgorithmKind.P2PL_NO_SYNC
        self.synchronize = synchronize
        self.devices = setup.create_devices()
        self.channel = ChannelModel(
            setup.success_prob,
            setup.streams.stream(CHANNEL) if setup.success_prob < 1.0 else None,
        )

    def initialize(self) -> None:
        if self.synchronize:
            max_norm_sync(self.devices, self.setup.graph)
        else:
            logger.info("Max norm synchronization disabled")

    def run_round(self, t: int) -> None:
        s = self.setup
        train_all(self.devices, s.train, s.hyperparams, s.reshuffle_each_epoch, s.workers)
        consensus_phase(self.devices, s.graph, s.mixing, s.schedule, self.channel, t)

    def models(self) -> list[ModelParams]:
        return [d.params for d in self.devices]

    def dataset_sizes(self) -> list[int]:
        return [d.n_k for d in self.devices]


def run_p2pl(setup: SimulationSetup, synchronize: bool = True) -> Iterator[RoundSnapshot]:
    return P2PLAlgorithm(setup, synchronize).rounds()
