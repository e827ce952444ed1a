#!/usr/bin/env python3
"""
Named experiment presets

  table1_*            complete-graph comparison of FedAvg, P2PL, P2PL without
                      sync, CFA with and without momentum
  table2_*            centralized / FedAvg baselines, Metropolis-Hastings
                      weights and pathological non-IID data per topology
  fig2_<topology>     P2PL with dataset-size weights on every topology
  table3_linkfail_<C> P2PL on an Erdos-Renyi graph with success probability C

Every preset uses master seed 1 and graph seed 1.
"""

from __future__ import annotations

from core.topology import GraphKind

from .experiment_config import ExperimentConfig, apply_overrides

PRESET_SEED = "1"

TOPOLOGIES = [
    GraphKind.COMPLETE,
    GraphKind.GRID2D,
    GraphKind.ERDOS_RENYI,
    GraphKind.WATTS_STROGATZ,
    GraphKind.STAR,
    GraphKind.RGG3D,
    GraphKind.RANDOM_TREE,
    GraphKind.CYCLE,
]

LINK_SUCCESS_PROBS = ["1", "0.5", "0.25", "0.125"]


class UnknownPresetError(ValueError):
    def __init__(self, name: str, available: list[str]) -> None:
        super().__init__(f"unknown preset {name!r}; available presets: {', '.join(available)}")
        self.name = name
        self.available = available


def _build_presets() -> dict[str, dict[str, str]]:
    base = {"master_seed": PRESET_SEED, "graph_seed": PRESET_SEED}
    noniid = {"partition": "pathological_noniid", "shards_per_device": "2"}
    presets: dict[str, dict[str, str]] = {
        "table1_fedavg": {"algorithm": "fedavg"},
        "table1_p2pl_complete": {"algorithm": "p2pl", "graph": "complete"},
        "table1_p2pl_no_sync_complete": {"algorithm": "p2pl_no_sync", "graph": "complete"},
        "table1_cfa_momentum_complete": {"algorithm": "cfa_momentum", "graph": "complete"},
        "table1_cfa_complete": {"algorithm": "cfa", "graph": "complete"},
        "table2_centralized": {"algorithm": "centralized"},
        "table2_fedavg": {"algorithm": "fedavg"},
        "table2_noniid_centralized": {"algorithm": "centralized", **noniid},
        "table2_noniid_fedavg": {"algorithm": "fedavg", **noniid},
    }
    for kind in TOPOLOGIES + [GraphKind.EMPTY]:
        presets[f"fig2_{kind.value}"] = {"algorithm": "p2pl", "graph": kind.value}
    for kind in TOPOLOGIES:
        presets[f"table2_mh_{kind.value}"] = {
            "algorithm": "p2pl", "graph": kind.value, "mixing": "metropolis_hastings",
        }
        presets[f"table2_noniid_{kind.value}"] = {"algorithm": "p2pl", "graph": kind.value, **noniid}
    for c in LINK_SUCCESS_PROBS:
        presets[f"table3_linkfail_{c}"] = {"algorithm": "p2pl", "graph": "erdos_renyi", "success_prob": c}
    return {name: {**base, **values} for name, values in presets.items()}


PRESETS = _build_presets()


def available_presets() -> list[str]:
    return sorted(PRESETS)


def preset_overrides(name: str) -> dict[str, str]:
    if name not in PRESETS:
        raise UnknownPresetError(name, available_presets())
    return dict(PRESETS[name])


def resolve_preset(name: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    config = apply_overrides(ExperimentConfig(), preset_overrides(name))
    config = apply_overrides(config, {"output": name})
    if overrides:
        config = apply_overrides(config, overrides)
    return config
