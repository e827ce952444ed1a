#!/usr/bin/env python3
"""
Protocol phases

  max_norm_sync     every device adopts the largest-norm parameter set in its
                    closed neighborhood, Diameter(G) times
  train_phase       one local epoch of momentum mini-batch GD
  consensus_phase   w_k <- w_k - eps_k * sum_i alpha_ki (w_k - w_i)

Sync and consensus iterations read a snapshot of the previous values, so the
outcome does not depend on device processing order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from core.dataset import Dataset, epoch_batches
from core.mixing import MixingScheme, NeighborMessage, StepSizeSchedule, neighbor_weights, step_size
from core.model import Hyperparams, ModelParams, loss_and_grad, momentum_step, param_norm
from core.topology import Graph, diameter

from .base import ChannelModel, DeviceState

logger = logging.getLogger(__name__)


def max_norm_sync(devices: list[DeviceState], graph: Graph, iterations: int | None = None) -> list[DeviceState]:
    """Runs Diameter(G) iterations unless ``iterations`` is given."""
    if graph.num_edges == 0:
        logger.info("Graph has no edges; skipping max norm synchronization")
        return devices

    if iterations is None:
        iterations = diameter(graph)
    logger.info("── max norm sync: %d iteration(s) ──", iterations)
    for _ in range(iterations):
        snapshot = [d.params for d in devices]
        norms = [param_norm(p) for p in snapshot]
        chosen = [
            max((k, *graph.neighbors[k]), key=lambda i: (norms[i], -i))
            for k in range(len(devices))
        ]
        for device, source in zip(devices, chosen):
            if source != device.id:
                device.params = snapshot[source].copy()
    return devices


def train_phase(device: DeviceState, data: Dataset, hp: Hyperparams, reshuffle: bool = True) -> DeviceState:
    if device.n_k == 0:
        logger.warning("Device %d has no local samples; skipping training", device.id)
        return device

    params, state = device.params, device.optimizer
    for batch in epoch_batches(device.local_data, hp.batch_size, device.rng, reshuffle):
        _, grad = loss_and_grad(params, data.images[batch], data.labels[batch])
        params, state = momentum_step(params, state, grad, hp)
        device.steps_taken += 1

    if not params.is_finite():
        raise FloatingPointError(f"device {device.id} produced non-finite parameters")
    device.params, device.optimizer = params, state
    return device


def train_all(
    devices: list[DeviceState], data: Dataset, hp: Hyperparams, reshuffle: bool = True, workers: int = 1,
) -> list[DeviceState]:
    if workers <= 1:
        return [train_phase(d, data, hp, reshuffle) for d in devices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda d: train_phase(d, data, hp, reshuffle), devices))


def consensus_phase(
    devices: list[DeviceState],
    graph: Graph,
    scheme: MixingScheme,
    schedule: StepSizeSchedule,
    channel: ChannelModel | None,
    t: int,
) -> list[DeviceState]:
    snapshot = [d.params for d in devices]
    sizes = [d.n_k for d in devices]
    received = channel.deliveries(graph) if channel is not None else [list(n) for n in graph.neighbors]

    updated: list[ModelParams] = []
    for device in devices:
        k = device.id
        messages = [NeighborMessage(i, sizes[i], graph.degree(i)) for i in received[k]]
        alphas = neighbor_weights(scheme, k, messages, sizes[k], graph.degree(k))
        if not alphas:
            updated.append(snapshot[k])
            continue
        eps = step_size(schedule, k, t, sizes[k], [sizes[i] for i in graph.neighbors[k]])
        w_k = snapshot[k].vector
        pull = np.zeros_like(w_k)
        for i, alpha in alphas.items():
            pull += alpha * (w_k - snapshot[i].vector)
        updated.append(ModelParams(w_k - eps * pull, snapshot[k].sizes))

    for device, params in zip(devices, updated):
        device.params = params
    return devices
