#!/usr/bin/env python3
"""Consensus mixing weights, consensus step sizes and stochasticity checks."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .topology import Graph


class MixingKind(str, Enum):
    DATASET_SIZE = "dataset_size"
    METROPOLIS_HASTINGS = "metropolis_hastings"


class StepSizeKind(str, Enum):
    CONSTANT = "constant"
    CFA_FORMULA = "cfa_formula"


@dataclass(frozen=True)
class MixingScheme:
    kind: MixingKind = MixingKind.DATASET_SIZE


@dataclass(frozen=True)
class StepSizeSchedule:
    kind: StepSizeKind = StepSizeKind.CONSTANT
    epsilon: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"consensus step size must be in [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class NeighborMessage:
    """What device k learns about neighbor i in a consensus exchange."""

    device_id: int
    dataset_size: int
    degree: int


def neighbor_weights(
    scheme: MixingScheme,
    k: int,
    received: Sequence[NeighborMessage],
    n_k: int,
    deg_k: int,
) -> dict[int, float]:
    """alpha_ki for every received neighbor i; the self weight is the remainder."""
    if not received:
        return {}
    if scheme.kind is MixingKind.DATASET_SIZE:
        denom = n_k + sum(m.dataset_size for m in received)
        return {m.device_id: m.dataset_size / denom for m in received}
    return {m.device_id: 1.0 / (1.0 + max(deg_k, m.degree)) for m in received}


def step_size(
    schedule: StepSizeSchedule,
    k: int,
    t: int,
    n_k: int,
    neighbor_sizes: Sequence[int],
) -> float:
    """epsilon_k^(t). The CFA formula is evaluated over the static neighbor set."""
    if schedule.kind is StepSizeKind.CONSTANT:
        return schedule.epsilon
    total = float(sum(neighbor_sizes))
    if total == 0.0:
        return 0.0
    return total / (n_k + total)


def effective_matrix(
    graph: Graph,
    scheme: MixingScheme,
    sizes: Sequence[int],
    schedule: StepSizeSchedule = StepSizeSchedule(),
    t: int = 1,
) -> np.ndarray:
    """K×K matrix M with M[k, i] = eps_k * alpha_ki and M[k, k] = 1 - eps_k * sum_i alpha_ki."""
    k_total = graph.num_devices
    matrix = np.zeros((k_total, k_total), dtype=np.float64)
    for k in range(k_total):
        received = [NeighborMessage(i, sizes[i], graph.degree(i)) for i in graph.neighbors[k]]
        alphas = neighbor_weights(scheme, k, received, sizes[k], graph.degree(k))
        eps = step_size(schedule, k, t, sizes[k], [sizes[i] for i in graph.neighbors[k]])
        for i, alpha in alphas.items():
            matrix[k, i] = eps * alpha
        matrix[k, k] = 1.0 - eps * sum(alphas.values())
    return matrix


@dataclass(frozen=True)
class StochasticityReport:
    row_sums: np.ndarray
    column_sums: np.ndarray
    max_asymmetry: float
    min_entry: float

    @property
    def max_row_deviation(self) -> float:
        return float(np.abs(self.row_sums - 1.0).max()) if self.row_sums.size else 0.0

    @property
    def max_column_deviation(self) -> float:
        return float(np.abs(self.column_sums - 1.0).max()) if self.column_sums.size else 0.0

    def is_row_stochastic(self, tol: float = 1e-12) -> bool:
        return self.min_entry >= -tol and self.max_row_deviation <= tol

    def is_doubly_stochastic(self, tol: float = 1e-12) -> bool:
        return self.is_row_stochastic(tol) and self.max_column_deviation <= tol

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return self.max_asymmetry <= tol


def verify_stochasticity(
    graph: Graph,
    scheme: MixingScheme,
    sizes: Sequence[int],
    schedule: StepSizeSchedule = StepSizeSchedule(),
) -> StochasticityReport:
    matrix = effective_matrix(graph, scheme, sizes, schedule)
    return StochasticityReport(
        row_sums=matrix.sum(axis=1),
        column_sums=matrix.sum(axis=0),
        max_asymmetry=float(np.abs(matrix - matrix.T).max()) if matrix.size else 0.0,
        min_entry=float(matrix.min()) if matrix.size else 0.0,
    )
