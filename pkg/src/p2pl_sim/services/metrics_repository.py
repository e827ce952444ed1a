#!/usr/bin/env python3
"""Persistence for per-run metric files (CSV) and run reports (JSON)."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import TextIO

METRIC_COLUMNS = ["round", "min_acc", "avg_acc", "max_acc", "objective", "dispersion"]


class MetricsParseError(ValueError):
    def __init__(self, path: Path, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    min_acc: float
    avg_acc: float
    max_acc: float
    objective: float
    dispersion: float

    def to_row(self) -> list[str]:
        return [str(self.round)] + [
            format(v, ".9g") for v in (self.min_acc, self.avg_acc, self.max_acc, self.objective, self.dispersion)
        ]


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    rounds_to_threshold: int | None
    wall_time_s: float
    rounds_run: int
    threshold: float
    evaluation_stride: int = 1
    approximate_convergence: bool = False


def rounds_to_threshold(records: list[RoundMetrics], threshold: float) -> int | None:
    """First recorded round whose minimum device accuracy reaches ``threshold``."""
    for record in records:
        if record.min_acc >= threshold:
            return record.round
    return None


class MetricsWriter:
    """Single-writer append of metric records with a header row."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self._handle: TextIO = path.open("w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(METRIC_COLUMNS)

    def append(self, record: RoundMetrics) -> None:
        self._writer.writerow(record.to_row())
        self._handle.flush()

    def close(self) -> None:
        self._handle.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def load_metrics(path: Path) -> list[RoundMetrics]:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise MetricsParseError(path, 1, "empty metric file")
    if rows[0] != METRIC_COLUMNS:
        raise MetricsParseError(path, 1, f"expected header {','.join(METRIC_COLUMNS)}")

    records: list[RoundMetrics] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(METRIC_COLUMNS):
            raise MetricsParseError(path, line_no, f"expected {len(METRIC_COLUMNS)} fields, got {len(row)}")
        try:
            record = RoundMetrics(int(row[0]), *(float(v) for v in row[1:]))
        except ValueError as exc:
            raise MetricsParseError(path, line_no, str(exc)) from None
        if records and record.round <= records[-1].round:
            raise MetricsParseError(path, line_no, f"round {record.round} does not increase")
        records.append(record)
    return records


@dataclass
class MetricsRepository:
    results_dir: Path

    def __post_init__(self) -> None:
        self.results_dir.mkdir(parents=True, exist_ok=True)

    def _checked_run_id(self, run_id: str) -> str:
        safe_run_id = re.sub(r"[^a-zA-Z0-9_.-]", "", run_id)
        if not safe_run_id or safe_run_id != run_id or run_id.startswith("."):
            raise ValueError(f"Invalid run_id: {run_id}")
        return run_id

    def metrics_path(self, run_id: str) -> Path:
        return self.results_dir / f"{self._checked_run_id(run_id)}.csv"

    def report_path(self, run_id: str) -> Path:
        return self.results_dir / f"{self._checked_run_id(run_id)}.json"

    def open_writer(self, run_id: str) -> MetricsWriter:
        return MetricsWriter(self.metrics_path(run_id))

    def save_report(self, run_id: str, config: dict[str, str], report: ConvergenceReport) -> dict:
        data = {
            "run_id": run_id,
            "created_at": datetime.now().isoformat(),
            "metrics_file": self.metrics_path(run_id).name,
            "config": config,
            "report": asdict(report),
        }
        self.report_path(run_id).write_text(json.dumps(data, indent=2), encoding="utf-8")
        return data

    def load_report(self, run_id: str) -> dict | None:
        try:
            path = self.report_path(run_id)
            if not path.exists():
                return None
            return json.loads(path.read_text(encoding="utf-8"))
        except (ValueError, OSError):
            return None

    def load_run_metrics(self, run_id: str) -> list[RoundMetrics] | None:
        path = self.metrics_path(run_id)
        if not path.exists():
            return None
        return load_metrics(path)

    def list_runs(self) -> list[dict]:
        runs: list[dict] = []
        for report_file in self.results_dir.glob("*.json"):
            data = self.load_report(report_file.stem)
            if not data:
                continue
            report = data.get("report", {})
            config = data.get("config", {})
            runs.append({
                "run_id": data.get("run_id", report_file.stem),
                "created_at": data.get("created_at"),
                "algorithm": config.get("algorithm"),
                "graph": config.get("graph"),
                "converged": report.get("converged"),
                "rounds_to_threshold": report.get("rounds_to_threshold"),
            })
        runs.sort(key=lambda x: x.get("created_at") or "", reverse=True)
        return runs
