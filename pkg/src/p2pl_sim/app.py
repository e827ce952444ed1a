#!/usr/bin/env python3
"""
P2PL simulator results API
Read-only HTTP access to recorded runs, metric streams and comparison tables.
"""

import logging
import os
from datetime import datetime
from pathlib import Path

from dotenv import load_dotenv
from flask import Flask

# Load .env from the src directory (parent of p2pl_sim)
load_dotenv(Path(__file__).resolve().parent.parent / ".env")

from config import AppConfig
from controllers.meta_controller import create_meta_blueprint
from controllers.runs_controller import create_runs_blueprint
from services.metrics_repository import MetricsRepository

LOG_FORMAT = "%(asctime)s  %(levelname)-8s  %(name)s  %(message)s"
LOG_DATEFMT = "%H:%M:%S"


def create_app(config: AppConfig | None = None, results_dir: Path | None = None) -> Flask:
    config = config or AppConfig()
    app = Flask(__name__)
    app_start_time = datetime.now().timestamp()

    metrics_repository = MetricsRepository(results_dir or config.results_dir)

    app.register_blueprint(create_runs_blueprint(metrics_repository=metrics_repository))
    app.register_blueprint(
        create_meta_blueprint(app_start_time=app_start_time, results_dir=metrics_repository.results_dir)
    )
    return app


def serve(host: str = "127.0.0.1", port: int = 5050, results_dir: Path | None = None) -> None:
    config = AppConfig()
    os.environ["FLASK_SKIP_DOTENV"] = "1"
    print(f"\n{'=' * 60}")
    print("  P2PL simulator results")
    print(f"  Results: {results_dir or config.results_dir}")
    print(f"  URL: http://{host}:{port}")
    print(f"{'=' * 60}\n")
    create_app(config, results_dir).run(host=host, port=port, debug=False, use_reloader=False)


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, datefmt=LOG_DATEFMT)
    serve()
