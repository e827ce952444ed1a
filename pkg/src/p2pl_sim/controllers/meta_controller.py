#!/usr/bin/env python3
"""Blueprint for health, preset and configuration-key endpoints."""

from __future__ import annotations

from flask import Blueprint, jsonify

from services.experiment_config import ExperimentConfig
from services.presets import available_presets, preset_overrides


def create_meta_blueprint(app_start_time: float, results_dir):
    bp = Blueprint("meta", __name__)

    @bp.route("/api/health")
    def api_health():
        return jsonify({"status": "ok", "start_time": app_start_time, "results_dir": str(results_dir)})

    @bp.route("/api/presets")
    def api_presets():
        return jsonify({"presets": {name: preset_overrides(name) for name in available_presets()}})

    @bp.route("/api/config/defaults")
    def api_config_defaults():
        return jsonify(ExperimentConfig().to_flat_dict())

    return bp
