#!/usr/bin/env python3
"""Simulator configuration: filesystem locations and shared constants."""

import os
from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class AppConfig:
    """Paths used throughout the simulator."""

    app_dir: Path = field(default_factory=lambda: Path(__file__).resolve().parent)

    @property
    def data_dir(self) -> Path:
        """Directory with the four MNIST IDX files."""
        env_val = os.environ.get("P2PL_DATA_DIR")
        if env_val:
            return Path(env_val).expanduser().resolve()
        return self.app_dir / "_data" / "mnist"

    @property
    def app_data_dir(self) -> Path:
        """Persistent simulator output."""
        d = self.app_dir / "_app_data"
        d.mkdir(parents=True, exist_ok=True)
        return d

    @property
    def results_dir(self) -> Path:
        env_val = os.environ.get("P2PL_RESULTS_DIR")
        if env_val:
            return Path(env_val).expanduser().resolve()
        return self.app_data_dir / "results"
