#!/usr/bin/env python3
"""Blueprint for read-only access to finished runs and their summary."""

from __future__ import annotations

from dataclasses import asdict

from flask import Blueprint, Response, jsonify, request

from services.metrics_repository import MetricsRepository
from services.summary_service import summarize


def create_runs_blueprint(metrics_repository: MetricsRepository):
    bp = Blueprint("runs", __name__)

    @bp.route("/api/runs", methods=["GET"])
    def api_list_runs():
        try:
            return jsonify({"runs": metrics_repository.list_runs()})
        except Exception as exc:
            return jsonify({"error": str(exc)}), 500

    @bp.route("/api/runs/<run_id>", methods=["GET"])
    def api_get_run(run_id):
        try:
            report = metrics_repository.load_report(run_id)
            if not report:
                return jsonify({"error": "Run not found"}), 404
            return jsonify(report)
        except ValueError as exc:
            return jsonify({"error": str(exc)}), 400
        except Exception as exc:
            return jsonify({"error": str(exc)}), 500

    @bp.route("/api/runs/<run_id>/metrics", methods=["GET"])
    def api_get_metrics(run_id):
        try:
            records = metrics_repository.load_run_metrics(run_id)
            if records is None:
                return jsonify({"error": "Run not found"}), 404
            return jsonify({"run_id": run_id, "records": [asdict(r) for r in records]})
        except ValueError as exc:
            return jsonify({"error": str(exc)}), 400
        except Exception as exc:
            return jsonify({"error": str(exc)}), 500

    @bp.route("/api/summary", methods=["GET"])
    def api_summary():
        try:
            fmt = request.args.get("format", "json")
            threshold = request.args.get("threshold", type=float)
            files = sorted(metrics_repository.results_dir.glob("*.csv"))
            if not files:
                return jsonify({"error": "No runs recorded"}), 404
            table = summarize(files, threshold)
            if fmt == "markdown":
                return Response(table.to_markdown(), mimetype="text/markdown")
            if fmt == "html":
                return Response(table.to_html(), mimetype="text/html")
            return jsonify({"threshold": table.threshold, "rows": table.to_json()})
        except ValueError as exc:
            return jsonify({"error": str(exc)}), 400
        except Exception as exc:
            return jsonify({"error": str(exc)}), 500

    return bp
