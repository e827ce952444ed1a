#!/usr/bin/env python3

from __future__ import annotations

import gzip
import struct

import numpy as np
import pytest

import conftest  # noqa: F401
from cli import main
from services.metrics_repository import load_metrics


def write_fake_mnist(data_dir, n_train: int = 80, n_test: int = 20) -> None:
    rng = np.random.default_rng(0)
    for prefix, n in (("train", n_train), ("t10k", n_test)):
        pixels = rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)
        labels = rng.integers(0, 10, size=n, dtype=np.uint8)
        with gzip.open(data_dir / f"{prefix}-images-idx3-ubyte.gz", "wb") as f:
            f.write(struct.pack(">4I", 0x803, n, 28, 28) + pixels.tobytes())
        (data_dir / f"{prefix}-labels-idx1-ubyte").write_bytes(struct.pack(">2I", 0x801, n) + labels.tobytes())


@pytest.fixture
def env(tmp_path, monkeypatch):
    data_dir = tmp_path / "mnist"
    data_dir.mkdir()
    write_fake_mnist(data_dir)
    results = tmp_path / "results"
    monkeypatch.setenv("P2PL_DATA_DIR", str(data_dir))
    monkeypatch.setenv("P2PL_RESULTS_DIR", str(results))
    return results


def test_presets_command(capsys):
    assert main(["presets"]) == 0
    assert "table1_fedavg" in capsys.readouterr().out.splitlines()


def test_run_and_summarize(env, capsys, tmp_path):
    code = main(["run", "--preset", "fig2_cycle", "--set", "K=4", "--set", "round_budget=2", "--output", "tiny"])
    assert code == 0
    assert "did not converge" in capsys.readouterr().out
    metrics = env / "tiny.csv"
    assert [r.round for r in load_metrics(metrics)] == [1, 2]

    series = tmp_path / "series.csv"
    assert main(["summarize", str(metrics), "--series", str(series)]) == 0
    out = capsys.readouterr().out
    assert "| tiny | p2pl | cycle |" in out
    assert series.exists()


def test_run_from_config_file(env, tmp_path):
    config = tmp_path / "exp.env"
    config.write_text("algorithm=centralized\nK=2\nround_budget=1\noutput=central\n", encoding="utf-8")
    assert main(["run", "--config", str(config)]) == 0
    assert (env / "central.json").exists()


def test_invalid_override_exits_with_error(env, capsys):
    assert main(["run", "--set", "epsilon=5"]) == 1
    assert "epsilon" in capsys.readouterr().err


def test_unknown_preset_exits_with_error(env, capsys):
    assert main(["run", "--preset", "nope"]) == 1
    assert "available presets" in capsys.readouterr().err


def test_preset_and_config_are_exclusive(env, tmp_path, capsys):
    config = tmp_path / "exp.env"
    config.write_text("K=2\n", encoding="utf-8")
    assert main(["run", "--preset", "table1_fedavg", "--config", str(config)]) == 1


def test_missing_data_exits_with_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("P2PL_RESULTS_DIR", str(tmp_path / "results"))
    assert main(["run", "--set", "K=2", "--data-dir", str(tmp_path / "nowhere")]) == 1
    assert "not found" in capsys.readouterr().err


def test_summarize_rejects_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n", encoding="utf-8")
    assert main(["summarize", str(bad)]) == 1
    assert main(["summarize"]) == 1


def test_verify_mixing_only(capsys):
    assert main(["verify", "--devices", "9", "--skip-stats"]) == 0
    assert "checks passed" in capsys.readouterr().out
