#!/usr/bin/env python3

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest

from core.topology import (
    REFERENCE_STATS,
    RGG_CALIBRATION_SEED,
    RGG_DEFAULT_DEGREE,
    DisconnectedGraphError,
    Graph,
    GraphConstructionError,
    GraphKind,
    GraphSpec,
    InvalidGraphSpec,
    StatCheck,
    average_stats,
    build,
    calibrate_rgg_radius,
    diameter,
    load_edge_list,
    save_edge_list,
    stats,
)


@pytest.mark.parametrize(
    "kind, edges, diam",
    [
        (GraphKind.COMPLETE, 4950, 1),
        (GraphKind.STAR, 99, 2),
        (GraphKind.CYCLE, 100, 50),
        (GraphKind.GRID2D, 180, 18),
    ],
)
def test_deterministic_graphs_at_k100(kind, edges, diam):
    g = build(GraphSpec(kind, 100))
    assert g.num_devices == 100
    assert g.num_edges == edges
    assert g.is_connected()
    assert diameter(g) == diam


def test_star_center_and_grid_labels():
    star = build(GraphSpec(GraphKind.STAR, 5))
    assert star.degree(0) == 4
    grid = build(GraphSpec(GraphKind.GRID2D, 9))
    # row-major labels: vertex 4 is the middle of a 3x3 grid
    assert grid.neighbors[4] == (1, 3, 5, 7)
    assert grid.neighbors[0] == (1, 3)


def test_empty_graph_is_disconnected():
    g = build(GraphSpec(GraphKind.EMPTY, 4))
    assert g.num_edges == 0
    assert not g.is_connected()
    with pytest.raises(DisconnectedGraphError):
        diameter(g)
    assert stats(g).diameter is None


def test_single_device_graph():
    g = build(GraphSpec(GraphKind.COMPLETE, 1))
    assert g.is_connected()
    assert diameter(g) == 0


@pytest.mark.parametrize(
    "spec",
    [
        GraphSpec(GraphKind.GRID2D, 10),
        GraphSpec(GraphKind.CYCLE, 2),
        GraphSpec(GraphKind.COMPLETE, 0),
        GraphSpec(GraphKind.WATTS_STROGATZ, 10, ws_neighbors=3),
        GraphSpec(GraphKind.ERDOS_RENYI, 10, edge_prob=1.5),
        GraphSpec(GraphKind.RGG3D, 10, radius=-1.0),
    ],
)
def test_invalid_specs_are_rejected(spec):
    with pytest.raises(InvalidGraphSpec):
        build(spec)


@pytest.mark.parametrize("kind", [GraphKind.ERDOS_RENYI, GraphKind.WATTS_STROGATZ, GraphKind.RANDOM_TREE])
def test_random_graphs_are_connected_and_seeded(kind):
    a = build(GraphSpec(kind, 50, seed=3))
    b = build(GraphSpec(kind, 50, seed=3))
    c = build(GraphSpec(kind, 50, seed=4))
    assert a.is_connected()
    assert a == b
    assert a != c


def test_random_tree_has_k_minus_one_edges():
    g = build(GraphSpec(GraphKind.RANDOM_TREE, 100, seed=2))
    assert g.num_edges == 99
    assert stats(g).avg_clustering_coefficient == 0.0


def test_rgg_with_fixed_radius():
    g = build(GraphSpec(GraphKind.RGG3D, 30, seed=1, radius=0.6))
    assert g.is_connected()


def test_unreachable_er_probability_raises():
    with pytest.raises(GraphConstructionError):
        build(GraphSpec(GraphKind.ERDOS_RENYI, 50, edge_prob=0.001))


def test_graph_rejects_self_loops_and_out_of_range_edges():
    with pytest.raises(InvalidGraphSpec):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(InvalidGraphSpec):
        Graph.from_edges(3, [(0, 3)])


def test_cycle_stats_match_closed_form():
    s = stats(build(GraphSpec(GraphKind.CYCLE, 100)))
    assert s.avg_degree == 2.0
    assert s.avg_shortest_path_length == pytest.approx(2500 / 99)
    assert REFERENCE_STATS[GraphKind.CYCLE]["avg_shortest_path_length"][0] == pytest.approx(s.avg_shortest_path_length)


def test_watts_strogatz_clustering_near_reference():
    observed = average_stats(GraphKind.WATTS_STROGATZ, 100, range(10))
    assert observed["avg_clustering_coefficient"] == pytest.approx(0.422, rel=0.15)
    assert observed["avg_degree"] == 4.0


def test_erdos_renyi_degree_near_reference():
    observed = average_stats(GraphKind.ERDOS_RENYI, 100, range(10))
    assert observed["avg_degree"] == pytest.approx(4.653, rel=0.15)


def test_stat_check_tolerance():
    assert StatCheck(GraphKind.CYCLE, "x", 1.1, 1.0, 0.15).passed
    assert not StatCheck(GraphKind.CYCLE, "x", 1.2, 1.0, 0.15).passed
    assert StatCheck(GraphKind.ERDOS_RENYI, "x", 5.0, 0.025, None).passed


def test_calibration_rejects_nonpositive_degree():
    with pytest.raises(GraphConstructionError):
        calibrate_rgg_radius(10, 0.0, seed=1)
    assert calibrate_rgg_radius(5, 4.0, seed=1) == pytest.approx(3 ** 0.5)


def test_rgg_calibration_hits_target_degree():
    radius = calibrate_rgg_radius(100, 4.0, seed=RGG_CALIBRATION_SEED)
    observed = average_stats(GraphKind.RGG3D, 100, range(5), radius=radius)
    assert observed["avg_degree"] == pytest.approx(4.0, rel=0.15)


def test_default_rgg3d_builds_connected_graphs_at_k100():
    for seed in (1, 2):
        g = build(GraphSpec(GraphKind.RGG3D, 100, seed=seed))
        assert g.is_connected()
        assert g == build(GraphSpec(GraphKind.RGG3D, 100, seed=seed))


def test_rgg_statistics_use_the_radius_experiments_build_with():
    radius = calibrate_rgg_radius(100, RGG_DEFAULT_DEGREE, RGG_CALIBRATION_SEED)
    assert average_stats(GraphKind.RGG3D, 100, range(3)) == average_stats(GraphKind.RGG3D, 100, range(3), radius=radius)
    assert build(GraphSpec(GraphKind.RGG3D, 100, seed=4)) == build(GraphSpec(GraphKind.RGG3D, 100, seed=4, radius=radius))


def test_edge_list_round_trip_and_errors(tmp_path):
    g = build(GraphSpec(GraphKind.GRID2D, 16))
    path = save_edge_list(g, tmp_path / "grid.txt")
    assert load_edge_list(path) == g

    bad = tmp_path / "bad.txt"
    bad.write_text("K=3\n0 1\n1 x\n", encoding="utf-8")
    with pytest.raises(ValueError, match=":3:"):
        load_edge_list(bad)


@pytest.mark.parametrize("kind", [GraphKind.ERDOS_RENYI, GraphKind.WATTS_STROGATZ, GraphKind.RANDOM_TREE, GraphKind.STAR])
def test_bfs_diameter_matches_floyd_warshall(kind):
    for seed in range(3):
        g = build(GraphSpec(kind, 40, seed=seed))
        dist = nx.floyd_warshall_numpy(g.to_networkx())
        assert diameter(g) == int(np.max(dist))
