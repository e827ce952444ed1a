#!/usr/bin/env python3
"""Experiment orchestration: setup, per-round evaluation, convergence and persistence."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from config import AppConfig
from core.dataset import Dataset, DevicePartition, load_mnist, partition_iid, partition_pathological_noniid
from core.mixing import MixingScheme, StepSizeSchedule
from core.model import Hyperparams, ModelParams, combine, evaluate_accuracy, mean_loss
from core.rng import PARTITION, StreamFactory
from core.topology import Graph, GraphKind, GraphSpec, build
from protocol.base import AlgorithmKind, RoundSnapshot, SimulationSetup, TrainingAlgorithm
from protocol.baselines import make_algorithm

from .experiment_config import ExperimentConfig, PartitionKind
from .metrics_repository import ConvergenceReport, MetricsRepository, RoundMetrics
from .presets import resolve_preset

logger = logging.getLogger(__name__)


@dataclass
class MetricsEvaluator:
    """Turns a round snapshot into RoundMetrics."""

    test: Dataset
    train: Dataset
    partition: DevicePartition
    _objective_set: Dataset = field(init=False, repr=False)

    def __post_init__(self) -> None:
        idx = np.sort(np.concatenate(self.partition.indices).astype(np.int64))
        covers_all = len(idx) == len(self.train) and np.array_equal(idx, np.arange(len(self.train)))
        self._objective_set = self.train if covers_all else self.train.subset(idx)

    def evaluate(self, snapshot: RoundSnapshot) -> RoundMetrics:
        accuracy_by_model: dict[int, float] = {}
        accuracies: list[float] = []
        for params in snapshot.models:
            key = id(params)
            if key not in accuracy_by_model:
                accuracy_by_model[key] = evaluate_accuracy(params, self.test.images, self.test.labels)
            accuracies.append(accuracy_by_model[key])

        mean_params = self.weighted_mean(snapshot.models, snapshot.sizes)
        objective = mean_loss(mean_params, self._objective_set.images, self._objective_set.labels)
        dispersion = max(p.distance(mean_params) for p in snapshot.models)
        return RoundMetrics(
            round=snapshot.round,
            min_acc=min(accuracies),
            avg_acc=float(np.mean(accuracies)),
            max_acc=max(accuracies),
            objective=objective,
            dispersion=dispersion,
        )

    @staticmethod
    def weighted_mean(models: list[ModelParams], sizes: list[int]) -> ModelParams:
        total = sum(sizes)
        if total == 0:
            return combine([(1.0 / len(models), m) for m in models])
        return combine([(n / total, m) for m, n in zip(models, sizes) if n])


def _load_datasets(config: ExperimentConfig, app_config: AppConfig) -> tuple[Dataset, Dataset]:
    data_dir = Path(config.data_dir) if config.data_dir else app_config.data_dir
    return load_mnist(data_dir)


def _limit(train: Dataset, test: Dataset, config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    if config.train_limit is not None:
        train = train.head(config.train_limit)
    if config.test_limit is not None:
        test = test.head(config.test_limit)
    return train, test


def build_graph(config: ExperimentConfig) -> Graph:
    if config.algorithm in (AlgorithmKind.FEDAVG, AlgorithmKind.CENTRALIZED):
        return build(GraphSpec(GraphKind.EMPTY, config.num_devices))
    return build(GraphSpec(
        kind=config.graph,
        num_devices=config.num_devices,
        seed=config.graph_seed,
        radius=config.rgg_radius,
        rgg_target_degree=config.rgg_target_degree,
        edge_prob=config.er_edge_prob,
        ws_neighbors=config.ws_neighbors,
        ws_rewire_prob=config.ws_rewire_prob,
    ))


def build_partition(config: ExperimentConfig, train: Dataset, streams: StreamFactory) -> DevicePartition:
    rng = streams.stream(PARTITION)
    if config.partition is PartitionKind.PATHOLOGICAL_NONIID:
        return partition_pathological_noniid(train, config.num_devices, config.shards_per_device, rng)
    return partition_iid(train, config.num_devices, rng)


def build_setup(config: ExperimentConfig, train: Dataset) -> SimulationSetup:
    streams = StreamFactory(config.master_seed)
    return SimulationSetup(
        train=train,
        partition=build_partition(config, train, streams),
        graph=build_graph(config),
        streams=streams,
        hyperparams=Hyperparams(config.batch_size, config.learning_rate, config.momentum),
        mixing=MixingScheme(config.mixing),
        schedule=StepSizeSchedule(config.step_size, config.epsilon),
        success_prob=config.success_prob,
        reshuffle_each_epoch=config.reshuffle_each_epoch,
        workers=config.workers,
    )


@dataclass
class ExperimentRunner:
    app_config: AppConfig = field(default_factory=AppConfig)
    repository: MetricsRepository | None = None

    def __post_init__(self) -> None:
        if self.repository is None:
            self.repository = MetricsRepository(self.app_config.results_dir)

    def run(
        self,
        config: ExperimentConfig,
        datasets: tuple[Dataset, Dataset] | None = None,
    ) -> tuple[Path, ConvergenceReport]:
        config.validate()
        run_id = config.output or f"run_{datetime.now().strftime('%Y%m%d_%H%M%S')}"

        train, test = datasets if datasets is not None else _load_datasets(config, self.app_config)
        train, test = _limit(train, test, config)

        logger.info("── experiment %s ──────────────────────────────", run_id)
        logger.info("  algorithm : %s", config.algorithm.value)
        logger.info("  graph     : %s (K=%d)", config.graph.value, config.num_devices)
        logger.info("  data      : %d train / %d test", len(train), len(test))
        if config.evaluation_stride > 1:
            logger.warning("Evaluating every %d rounds; convergence round is approximate", config.evaluation_stride)

        setup = build_setup(config, train)
        algorithm = make_algorithm(config.algorithm, setup)
        evaluator = MetricsEvaluator(test, train, setup.partition)

        started = time.perf_counter()
        records, converged_at = self._loop(algorithm, evaluator, config, run_id)
        wall_time = time.perf_counter() - started

        report = ConvergenceReport(
            converged=converged_at is not None,
            rounds_to_threshold=converged_at,
            wall_time_s=wall_time,
            rounds_run=records[-1].round if records else 0,
            threshold=config.threshold,
            evaluation_stride=config.evaluation_stride,
            approximate_convergence=config.evaluation_stride > 1,
        )
        self.repository.save_report(run_id, config.to_flat_dict(), report)
        logger.info(
            "── %s finished: converged=%s rounds=%s (%.1fs) ──",
            run_id, report.converged, report.rounds_to_threshold, wall_time,
        )
        return self.repository.metrics_path(run_id), report

    def _loop(
        self, algorithm: TrainingAlgorithm, evaluator: MetricsEvaluator, config: ExperimentConfig, run_id: str,
    ) -> tuple[list[RoundMetrics], int | None]:
        records: list[RoundMetrics] = []
        with self.repository.open_writer(run_id) as writer:
            for snapshot in algorithm.rounds():
                t = snapshot.round
                if t % config.evaluation_stride == 0 or t == config.round_budget:
                    record = evaluator.evaluate(snapshot)
                    writer.append(record)
                    records.append(record)
                    logger.info(
                        "round %5d  min %.4f  avg %.4f  max %.4f  obj %.5f  disp %.4g",
                        t, record.min_acc, record.avg_acc, record.max_acc, record.objective, record.dispersion,
                    )
                    if record.min_acc >= config.threshold:
                        return records, t
                if t >= config.round_budget:
                    break
        return records, None


def run_experiment(
    config: ExperimentConfig,
    *,
    datasets: tuple[Dataset, Dataset] | None = None,
    app_config: AppConfig | None = None,
    repository: MetricsRepository | None = None,
) -> tuple[Path, ConvergenceReport]:
    runner = ExperimentRunner(app_config or AppConfig(), repository)
    return runner.run(config, datasets)


def run_preset(name: str, overrides: dict[str, str] | None = None, **kwargs) -> tuple[Path, ConvergenceReport]:
    return run_experiment(resolve_preset(name, overrides), **kwargs)
