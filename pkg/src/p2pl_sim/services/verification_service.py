#!/usr/bin/env python3
"""Validators behind the ``verify`` command: mixing stochasticity and graph statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from core.mixing import MixingKind, MixingScheme, verify_stochasticity
from core.topology import GraphKind, GraphSpec, REFERENCE_STATS, build, validate_stats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    informational: bool = False


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> None:
        level = logging.INFO if check.passed else logging.ERROR
        logger.log(level, "%-48s %s  %s", check.name, "ok" if check.passed else "FAIL", check.detail)
        self.checks.append(check)

    def render(self) -> str:
        lines = []
        for c in self.checks:
            status = "info" if c.informational else ("ok" if c.passed else "FAIL")
            lines.append(f"[{status:>4}] {c.name}: {c.detail}")
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def verify_mixing(num_devices: int = 100, seed: int = 1, tol: float = 1e-12) -> VerificationReport:
    """Row stochasticity of dataset-size weights and double stochasticity/symmetry of M-H on every topology."""
    report = VerificationReport()
    sizes = np.random.default_rng(seed).integers(100, 1000, size=num_devices).tolist()
    for kind in GraphKind:
        if kind is GraphKind.GRID2D and int(np.sqrt(num_devices)) ** 2 != num_devices:
            continue
        graph = build(GraphSpec(kind, num_devices, seed=seed))

        ds = verify_stochasticity(graph, MixingScheme(MixingKind.DATASET_SIZE), sizes)
        report.add(Check(
            f"dataset_size row stochastic [{kind.value}]",
            ds.is_row_stochastic(tol),
            f"max row deviation {ds.max_row_deviation:.2e}",
        ))

        mh = verify_stochasticity(graph, MixingScheme(MixingKind.METROPOLIS_HASTINGS), sizes)
        report.add(Check(
            f"metropolis_hastings doubly stochastic [{kind.value}]",
            mh.is_doubly_stochastic(tol) and mh.is_symmetric(tol),
            f"row {mh.max_row_deviation:.2e}, column {mh.max_column_deviation:.2e}, "
            f"asymmetry {mh.max_asymmetry:.2e}",
        ))
    return report


def verify_graph_stats(num_devices: int = 100, seeds: int = 20) -> VerificationReport:
    report = VerificationReport()
    if num_devices != 100:
        logger.warning("Reference graph statistics are for K=100; comparing K=%d against them", num_devices)
    for kind in REFERENCE_STATS:
        for check in validate_stats(kind, num_devices, range(seeds)):
            informational = check.tolerance is None
            report.add(Check(
                f"{kind.value} {check.name}",
                check.passed,
                f"observed {check.observed:.4f}, reference {check.reference:.4f}, "
                f"deviation {check.deviation:.1%}",
                informational=informational,
            ))
    return report


def run_verification(num_devices: int = 100, seeds: int = 20, include_stats: bool = True) -> VerificationReport:
    report = verify_mixing(num_devices)
    if include_stats:
        report.checks.extend(verify_graph_stats(num_devices, seeds).checks)
    return report
