#!/usr/bin/env python3
"""Comparison tables and accuracy series built from metric files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import markdown

from .metrics_repository import RoundMetrics, load_metrics, rounds_to_threshold

NOT_CONVERGED = "—"
DEFAULT_THRESHOLD = 0.97


@dataclass(frozen=True)
class SummaryRow:
    run_id: str
    algorithm: str
    setting: str
    rounds: int | None
    final_avg_acc: float
    records: list[RoundMetrics]


@dataclass(frozen=True)
class SummaryTable:
    threshold: float
    rows: list[SummaryRow]

    def to_markdown(self) -> str:
        lines = [
            f"Rounds for minimum test accuracy to reach {self.threshold:.0%}",
            "",
            "| Run | Algorithm | Setting | Rounds | Final avg. accuracy |",
            "|---|---|---|---:|---:|",
        ]
        for row in self.rows:
            rounds = str(row.rounds) if row.rounds is not None else NOT_CONVERGED
            lines.append(
                f"| {row.run_id} | {row.algorithm} | {row.setting} | {rounds} | {row.final_avg_acc:.4f} |"
            )
        return "\n".join(lines) + "\n"

    def to_html(self) -> str:
        return markdown.markdown(self.to_markdown(), extensions=["tables"])

    def to_json(self) -> list[dict]:
        return [
            {
                "run_id": r.run_id,
                "algorithm": r.algorithm,
                "setting": r.setting,
                "rounds_to_threshold": r.rounds,
                "final_avg_acc": r.final_avg_acc,
            }
            for r in self.rows
        ]

    def write_series(self, path: Path) -> Path:
        """Long-format accuracy-vs-round series for external plotting."""
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["run", "round", "min_acc", "avg_acc", "max_acc"])
            for row in self.rows:
                for rec in row.records:
                    writer.writerow([
                        row.run_id, rec.round,
                        format(rec.min_acc, ".9g"), format(rec.avg_acc, ".9g"), format(rec.max_acc, ".9g"),
                    ])
        return path


def _sidecar_config(metrics_path: Path) -> dict:
    report_path = metrics_path.with_suffix(".json")
    if not report_path.exists():
        return {}
    try:
        return json.loads(report_path.read_text(encoding="utf-8")).get("config", {})
    except (ValueError, OSError):
        return {}


def _setting(config: dict) -> str:
    if not config:
        return ""
    if config.get("algorithm") in ("fedavg", "centralized"):
        parts = []
    else:
        parts = [config.get("graph", "")]
        if config.get("mixing") == "metropolis_hastings":
            parts.append("M-H")
        if config.get("success_prob") not in (None, "1.0", "1"):
            parts.append(f"C={config['success_prob']}")
    if config.get("partition") == "pathological_noniid":
        parts.append("non-IID")
    return ", ".join(p for p in parts if p)


def summarize(metric_files: list[Path], threshold: float | None = None) -> SummaryTable:
    if not metric_files:
        raise ValueError("summarize needs at least one metric file")

    rows: list[SummaryRow] = []
    table_threshold = threshold
    for path in map(Path, metric_files):
        records = load_metrics(path)
        config = _sidecar_config(path)
        run_threshold = threshold if threshold is not None else float(config.get("threshold", DEFAULT_THRESHOLD))
        table_threshold = table_threshold if table_threshold is not None else run_threshold
        rows.append(SummaryRow(
            run_id=path.stem,
            algorithm=config.get("algorithm", ""),
            setting=_setting(config),
            rounds=rounds_to_threshold(records, run_threshold),
            final_avg_acc=records[-1].avg_acc if records else 0.0,
            records=records,
        ))
    return SummaryTable(table_threshold if table_threshold is not None else DEFAULT_THRESHOLD, rows)
