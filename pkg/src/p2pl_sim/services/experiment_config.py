#!/usr/bin/env python3
"""
Experiment configuration

Flat ``key=value`` files (parsed with python-dotenv) plus ``--set key=value``
overrides, coerced onto a frozen dataclass. Validation reports every violated
field at once. Keys are documented in docs/config_reference.md.
"""

from __future__ import annotations

import dataclasses
import math
import types
import typing
from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from dotenv import dotenv_values

from core.mixing import MixingKind, StepSizeKind
from core.topology import GraphKind
from protocol.base import AlgorithmKind


class PartitionKind(str, Enum):
    IID = "iid"
    PATHOLOGICAL_NONIID = "pathological_noniid"


class ConfigValidationError(ValueError):
    def __init__(self, errors: list[str]) -> None:
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(errors))
        self.errors = errors


KEY_ALIASES = {"K": "num_devices", "B": "batch_size", "C": "success_prob", "seed": "master_seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: AlgorithmKind = AlgorithmKind.P2PL
    graph: GraphKind = GraphKind.COMPLETE
    num_devices: int = 100
    graph_seed: int = 1
    rgg_radius: float | None = None
    rgg_target_degree: float = 4.0
    er_edge_prob: float | None = None
    ws_neighbors: int = 4
    ws_rewire_prob: float = 0.05
    batch_size: int = 10
    learning_rate: float = 0.01
    momentum: float = 0.5
    mixing: MixingKind = MixingKind.DATASET_SIZE
    step_size: StepSizeKind = StepSizeKind.CONSTANT
    epsilon: float = 1.0
    success_prob: float = 1.0
    partition: PartitionKind = PartitionKind.IID
    shards_per_device: int = 2
    reshuffle_each_epoch: bool = True
    master_seed: int = 1
    round_budget: int = 10_000
    threshold: float = 0.97
    evaluation_stride: int = 1
    train_limit: int | None = None
    test_limit: int | None = None
    workers: int = 1
    data_dir: str | None = None
    output: str | None = None

    def validation_errors(self) -> list[str]:
        errors: list[str] = []

        def check(ok: bool, message: str) -> None:
            if not ok:
                errors.append(message)

        check(0.0 <= self.threshold <= 1.0, f"threshold: must be in [0, 1], got {self.threshold}")
        check(self.round_budget >= 1, f"round_budget: must be >= 1, got {self.round_budget}")
        check(self.num_devices >= 1, f"num_devices: must be >= 1, got {self.num_devices}")
        check(self.batch_size >= 1, f"batch_size: must be >= 1, got {self.batch_size}")
        check(self.learning_rate >= 0.0 and math.isfinite(self.learning_rate),
              f"learning_rate: must be a finite value >= 0, got {self.learning_rate}")
        check(0.0 <= self.momentum < 1.0, f"momentum: must be in [0, 1), got {self.momentum}")
        check(0.0 <= self.epsilon <= 1.0, f"epsilon: must be in [0, 1], got {self.epsilon}")
        check(0.0 < self.success_prob <= 1.0, f"success_prob: must be in (0, 1], got {self.success_prob}")
        check(self.success_prob == 1.0 or self.algorithm in (AlgorithmKind.P2PL, AlgorithmKind.P2PL_NO_SYNC),
              f"success_prob: link failures apply to p2pl variants only, not {self.algorithm.value}")
        check(self.evaluation_stride >= 1, f"evaluation_stride: must be >= 1, got {self.evaluation_stride}")
        check(self.shards_per_device >= 1, f"shards_per_device: must be >= 1, got {self.shards_per_device}")
        check(self.workers >= 1, f"workers: must be >= 1, got {self.workers}")
        check(self.ws_neighbors >= 2 and self.ws_neighbors % 2 == 0,
              f"ws_neighbors: must be an even number >= 2, got {self.ws_neighbors}")
        check(0.0 <= self.ws_rewire_prob <= 1.0, f"ws_rewire_prob: must be in [0, 1], got {self.ws_rewire_prob}")
        check(self.rgg_target_degree > 0.0, f"rgg_target_degree: must be > 0, got {self.rgg_target_degree}")
        if self.rgg_radius is not None:
            check(self.rgg_radius > 0.0, f"rgg_radius: must be > 0, got {self.rgg_radius}")
        if self.er_edge_prob is not None:
            check(0.0 < self.er_edge_prob <= 1.0, f"er_edge_prob: must be in (0, 1], got {self.er_edge_prob}")
        if self.train_limit is not None:
            check(self.train_limit >= 1, f"train_limit: must be >= 1, got {self.train_limit}")
        if self.test_limit is not None:
            check(self.test_limit >= 1, f"test_limit: must be >= 1, got {self.test_limit}")
        if self.graph is GraphKind.GRID2D:
            check(math.isqrt(self.num_devices) ** 2 == self.num_devices,
                  f"graph: grid2d needs a square num_devices, got {self.num_devices}")
        if self.graph is GraphKind.CYCLE:
            check(self.num_devices >= 3, f"graph: cycle needs num_devices >= 3, got {self.num_devices}")
        if self.graph is GraphKind.WATTS_STROGATZ:
            check(self.ws_neighbors < self.num_devices,
                  f"ws_neighbors: must be < num_devices ({self.num_devices}), got {self.ws_neighbors}")
        return errors

    def validate(self) -> "ExperimentConfig":
        errors = self.validation_errors()
        if errors:
            raise ConfigValidationError(errors)
        return self

    def to_flat_dict(self) -> dict[str, str]:
        return {f.name: _format_value(getattr(self, f.name)) for f in fields(self)}


# ── Coercion ──────────────────────────────────────────────────────────────────

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _field_types() -> dict[str, type]:
    return typing.get_type_hints(ExperimentConfig)


def _coerce(raw: str, target) -> object:
    text = raw.strip()
    args = typing.get_args(target)
    if isinstance(target, types.UnionType) or typing.get_origin(target) is typing.Union:
        if text.lower() in ("", "none", "null"):
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(text, inner[0])
    if isinstance(target, type) and issubclass(target, Enum):
        try:
            return target(text)
        except ValueError:
            choices = ", ".join(m.value for m in target)
            raise ValueError(f"expected one of {choices}, got {text!r}") from None
    if target is bool:
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if target is int:
        return int(text)
    if target is float:
        return float(text)
    return text


def apply_overrides(base: ExperimentConfig, overrides: Mapping[str, str | None]) -> ExperimentConfig:
    """Apply string overrides; unknown keys and unparsable values are reported together."""
    types_by_name = _field_types()
    changes: dict[str, object] = {}
    errors: list[str] = []
    for key, raw in overrides.items():
        name = KEY_ALIASES.get(key, key)
        if name not in types_by_name:
            errors.append(f"{key}: unknown configuration key")
            continue
        try:
            changes[name] = _coerce(raw if raw is not None else "", types_by_name[name])
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
    if errors:
        raise ConfigValidationError(errors)
    return replace(base, **changes)


def parse_set_args(pairs: Iterable[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigValidationError([f"--set {pair!r}: expected key=value"])
        out[key.strip()] = value.strip()
    return out


def load_config_file(path: Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return apply_overrides(base or ExperimentConfig(), dotenv_values(path))


def dump_config(config: ExperimentConfig, path: Path) -> Path:
    path = Path(path)
    lines = [f"{k}={v}" for k, v in config.to_flat_dict().items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def config_keys() -> list[str]:
    return [f.name for f in dataclasses.fields(ExperimentConfig)]
