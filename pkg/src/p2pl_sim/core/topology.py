#!/usr/bin/env python3
"""
Communication topologies

Builds the undirected communication graphs used by the simulator, answers
connectivity and diameter queries, and computes the graph statistics used to
check generated random graphs against published reference values.

Random kinds are resampled with a fresh sub-seed until connected.
"""

from __future__ import annotations

import functools
import logging
import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import networkx as nx
import numpy as np

logger = logging.getLogger(__name__)

MAX_CONNECT_RETRIES = 1000
RGG_CONNECT_RETRIES = 20_000
RGG_CALIBRATION_SEED = 0
ER_DEFAULT_DEGREE = 4.653
WS_DEFAULT_REWIRE = 0.05
RGG_DEFAULT_DEGREE = 4.0
UNIT_CUBE_DIAGONAL = math.sqrt(3.0)


class GraphKind(str, Enum):
    COMPLETE = "complete"
    STAR = "star"
    CYCLE = "cycle"
    GRID2D = "grid2d"
    EMPTY = "empty"
    RGG3D = "rgg3d"
    ERDOS_RENYI = "erdos_renyi"
    WATTS_STROGATZ = "watts_strogatz"
    RANDOM_TREE = "random_tree"

    @property
    def is_random(self) -> bool:
        return self in RANDOM_KINDS


RANDOM_KINDS = {GraphKind.RGG3D, GraphKind.ERDOS_RENYI, GraphKind.WATTS_STROGATZ, GraphKind.RANDOM_TREE}


class InvalidGraphSpec(ValueError):
    pass


class GraphConstructionError(RuntimeError):
    pass


class DisconnectedGraphError(ValueError):
    pass


@dataclass(frozen=True)
class GraphSpec:
    kind: GraphKind
    num_devices: int = 100
    seed: int = 1
    radius: float | None = None          # rgg3d; one calibrated radius per (K, rgg_target_degree) when unset
    rgg_target_degree: float = RGG_DEFAULT_DEGREE
    edge_prob: float | None = None       # erdos_renyi; defaults to 4.653 / (K - 1)
    ws_neighbors: int = 4
    ws_rewire_prob: float = WS_DEFAULT_REWIRE

    def describe(self) -> str:
        return f"{self.kind.value}(K={self.num_devices}, seed={self.seed})"


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph stored as sorted neighbor tuples."""

    num_devices: int
    neighbors: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, num_devices: int, edges) -> "Graph":
        adj: list[set[int]] = [set() for _ in range(num_devices)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidGraphSpec(f"self-loop on vertex {u}")
            if not (0 <= u < num_devices and 0 <= v < num_devices):
                raise InvalidGraphSpec(f"edge ({u}, {v}) outside 0..{num_devices - 1}")
            adj[u].add(v)
            adj[v].add(u)
        return cls(num_devices, tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        return cls.from_edges(g.number_of_nodes(), g.edges())

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_devices))
        g.add_edges_from(self.edges())
        return g

    def degree(self, k: int) -> int:
        return len(self.neighbors[k])

    def degrees(self) -> list[int]:
        return [len(n) for n in self.neighbors]

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.neighbors) for v in nbrs if u < v]

    @property
    def num_edges(self) -> int:
        return sum(self.degrees()) // 2

    def bfs_distances(self, source: int) -> list[int]:
        """Hop counts from ``source``; -1 marks unreachable vertices."""
        dist = [-1] * self.num_devices
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def is_connected(self) -> bool:
        if self.num_devices == 0:
            return False
        return min(self.bfs_distances(0)) >= 0


@dataclass(frozen=True)
class GraphStats:
    avg_degree: float
    avg_clustering_coefficient: float
    avg_shortest_path_length: float
    diameter: int | None


# ── Construction ──────────────────────────────────────────────────────────────

def _attempt_seed(seed: int, attempt: int) -> int:
    return int(np.random.SeedSequence([int(seed), attempt]).generate_state(1)[0])


def _validate(spec: GraphSpec) -> None:
    k = spec.num_devices
    if k < 1:
        raise InvalidGraphSpec(f"{spec.describe()}: need at least one device")
    if spec.kind is GraphKind.CYCLE and k < 3:
        raise InvalidGraphSpec(f"{spec.describe()}: a cycle needs at least 3 devices")
    if spec.kind is GraphKind.GRID2D and math.isqrt(k) ** 2 != k:
        raise InvalidGraphSpec(f"{spec.describe()}: grid2d requires a square number of devices")
    if spec.kind is GraphKind.ERDOS_RENYI and spec.edge_prob is not None and not 0.0 < spec.edge_prob <= 1.0:
        raise InvalidGraphSpec(f"{spec.describe()}: edge_prob must be in (0, 1]")
    if spec.kind is GraphKind.WATTS_STROGATZ:
        if spec.ws_neighbors < 2 or spec.ws_neighbors % 2 or spec.ws_neighbors >= k:
            raise InvalidGraphSpec(f"{spec.describe()}: ws_neighbors must be even, >= 2 and < K")
        if not 0.0 <= spec.ws_rewire_prob <= 1.0:
            raise InvalidGraphSpec(f"{spec.describe()}: ws_rewire_prob must be in [0, 1]")
    if spec.kind is GraphKind.RGG3D and spec.radius is not None and spec.radius <= 0:
        raise InvalidGraphSpec(f"{spec.describe()}: radius must be positive")


def _random_tree(k: int, seed: int) -> nx.Graph:
    if k <= 2:
        return nx.path_graph(k)
    rng = np.random.default_rng(seed)
    prufer = rng.integers(0, k, size=k - 2).tolist()
    return nx.from_prufer_sequence(prufer)


def _sample(spec: GraphSpec, seed: int) -> nx.Graph:
    k = spec.num_devices
    if spec.kind is GraphKind.ERDOS_RENYI:
        p = spec.edge_prob if spec.edge_prob is not None else min(1.0, ER_DEFAULT_DEGREE / max(k - 1, 1))
        return nx.gnp_random_graph(k, p, seed=seed)
    if spec.kind is GraphKind.WATTS_STROGATZ:
        return nx.watts_strogatz_graph(k, spec.ws_neighbors, spec.ws_rewire_prob, seed=seed)
    return _random_tree(k, seed)


def _retry_limit(kind: GraphKind) -> int:
    return RGG_CONNECT_RETRIES if kind is GraphKind.RGG3D else MAX_CONNECT_RETRIES


def _rgg_positions(k: int, seed: int) -> np.ndarray:
    """Uniform placement in the unit cube."""
    return np.random.default_rng(seed).random((k, 3))


def _pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _spans_all(adjacency: np.ndarray) -> bool:
    reached = np.zeros(len(adjacency), dtype=bool)
    reached[0] = True
    while True:
        grown = reached | adjacency[reached].any(axis=0)
        if np.array_equal(grown, reached):
            return bool(reached.all())
        reached = grown


def _sample_connected_rgg(spec: GraphSpec, max_retries: int) -> Graph | None:
    # Connectivity is checked on the numpy adjacency before a Graph is built.
    k = spec.num_devices
    for attempt in range(max_retries):
        adjacency = _pairwise_distances(_rgg_positions(k, _attempt_seed(spec.seed, attempt))) <= spec.radius
        if _spans_all(adjacency):
            if attempt:
                logger.debug("%s connected after %d resamples", spec.describe(), attempt)
            return Graph.from_edges(k, zip(*np.nonzero(np.triu(adjacency, 1))))
    return None


def _sample_connected(spec: GraphSpec) -> Graph | None:
    if spec.kind is GraphKind.RGG3D:
        return _sample_connected_rgg(spec, RGG_CONNECT_RETRIES)
    for attempt in range(MAX_CONNECT_RETRIES):
        g = _sample(spec, _attempt_seed(spec.seed, attempt))
        if g.number_of_nodes() == 1 or nx.is_connected(g):
            if attempt:
                logger.debug("%s connected after %d resamples", spec.describe(), attempt)
            return Graph.from_networkx(g)
    return None


def build(spec: GraphSpec) -> Graph:
    """Deterministic graph for ``(kind, K, seed)``."""
    _validate(spec)
    k = spec.num_devices

    if spec.kind is GraphKind.COMPLETE:
        return Graph.from_networkx(nx.complete_graph(k))
    if spec.kind is GraphKind.STAR:
        return Graph.from_networkx(nx.star_graph(k - 1))
    if spec.kind is GraphKind.CYCLE:
        return Graph.from_networkx(nx.cycle_graph(k))
    if spec.kind is GraphKind.EMPTY:
        return Graph.from_networkx(nx.empty_graph(k))
    if spec.kind is GraphKind.GRID2D:
        side = math.isqrt(k)
        grid = nx.grid_2d_graph(side, side)
        return Graph.from_networkx(nx.convert_node_labels_to_integers(grid, ordering="sorted"))

    if spec.kind is GraphKind.RGG3D and spec.radius is None:
        radius = calibrate_rgg_radius(k, spec.rgg_target_degree, RGG_CALIBRATION_SEED)
        spec = replace(spec, radius=radius)

    graph = _sample_connected(spec)
    if graph is None:
        raise GraphConstructionError(
            f"{spec.describe()}: no connected graph after {_retry_limit(spec.kind)} resamples"
        )
    return graph


# ── Queries ───────────────────────────────────────────────────────────────────

def diameter(g: Graph) -> int:
    """Maximum BFS eccentricity."""
    best = 0
    for source in range(g.num_devices):
        dist = g.bfs_distances(source)
        if min(dist) < 0:
            raise DisconnectedGraphError("diameter is undefined for a disconnected graph")
        best = max(best, max(dist))
    return best


def stats(g: Graph) -> GraphStats:
    k = g.num_devices
    avg_degree = 2.0 * g.num_edges / k if k else 0.0
    clustering = float(nx.average_clustering(g.to_networkx())) if k else 0.0

    total, pairs = 0, 0
    for source in range(k):
        for target, d in enumerate(g.bfs_distances(source)):
            if target > source and d > 0:
                total += d
                pairs += 1
    avg_path = total / pairs if pairs else 0.0
    diam = diameter(g) if k and g.is_connected() else None
    return GraphStats(avg_degree, clustering, avg_path, diam)


# ── RGG radius calibration ────────────────────────────────────────────────────

@functools.lru_cache(maxsize=32)
def calibrate_rgg_radius(
    num_devices: int,
    target_avg_degree: float,
    seed: int,
    *,
    trials: int = 20,
    tolerance: float = 0.05,
    max_iterations: int = 60,
) -> float:
    """Bisection on the radius until the mean degree over fixed trial placements hits the target.

    Placements are not conditioned on connectivity. With the placements held
    fixed the mean degree is non-decreasing in the radius.
    """
    if target_avg_degree <= 0:
        raise GraphConstructionError("target degree must be positive: radius 0 leaves the graph disconnected")
    if target_avg_degree >= num_devices - 1:
        return UNIT_CUBE_DIAGONAL

    upper = np.triu_indices(num_devices, 1)
    pooled = np.concatenate([
        _pairwise_distances(_rgg_positions(num_devices, _attempt_seed(seed, 10_000 + trial)))[upper]
        for trial in range(trials)
    ])

    def mean_degree(radius: float) -> float:
        return 2.0 * np.count_nonzero(pooled <= radius) / (num_devices * trials)

    lo, hi = 0.0, UNIT_CUBE_DIAGONAL
    for iteration in range(max_iterations):
        radius = 0.5 * (lo + hi)
        degree = mean_degree(radius)
        logger.debug("calibration %d: r=%.5f mean degree=%.3f", iteration, radius, degree)
        if degree < target_avg_degree * (1.0 - tolerance):
            lo = radius
        elif degree > target_avg_degree * (1.0 + tolerance):
            hi = radius
        else:
            logger.info("Calibrated RGG radius %.5f (mean degree %.3f, K=%d)", radius, degree, num_devices)
            return radius
    raise GraphConstructionError(
        f"RGG radius calibration for K={num_devices}, degree {target_avg_degree} "
        f"did not converge in {max_iterations} iterations"
    )


# ── Reference statistics ──────────────────────────────────────────────────────

# Published averages for K=100. ``None`` tolerance marks a value reported for
# information only (see DESIGN.md: ER clustering).
REFERENCE_STATS: dict[GraphKind, dict[str, tuple[float, float | None]]] = {
    GraphKind.RGG3D: {
        "avg_degree": (4.0, 0.15),
        "avg_clustering_coefficient": (0.478, 0.15),
        "avg_shortest_path_length": (8.625, 0.15),
    },
    GraphKind.ERDOS_RENYI: {
        "avg_degree": (4.653, 0.15),
        "avg_clustering_coefficient": (0.025, None),
        "avg_shortest_path_length": (3.552, 0.15),
    },
    GraphKind.WATTS_STROGATZ: {
        "avg_clustering_coefficient": (0.422, 0.15),
        "avg_shortest_path_length": (5.885, 0.15),
    },
    GraphKind.RANDOM_TREE: {
        "avg_clustering_coefficient": (0.0, 0.15),
        "avg_shortest_path_length": (10.922, 0.15),
    },
    GraphKind.CYCLE: {
        "avg_shortest_path_length": (2500 / 99, 1e-9),
    },
}


@dataclass(frozen=True)
class StatCheck:
    kind: GraphKind
    name: str
    observed: float
    reference: float
    tolerance: float | None

    @property
    def deviation(self) -> float:
        if self.reference == 0:
            return abs(self.observed)
        return abs(self.observed - self.reference) / abs(self.reference)

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.deviation <= self.tolerance


def average_stats(kind: GraphKind, num_devices: int, seeds, radius: float | None = None) -> dict[str, float]:
    """Mean of every GraphStats field over the given seeds."""
    if kind is GraphKind.RGG3D and radius is None:
        radius = calibrate_rgg_radius(num_devices, RGG_DEFAULT_DEGREE, RGG_CALIBRATION_SEED)
    collected: list[GraphStats] = [
        stats(build(GraphSpec(kind, num_devices, seed=s, radius=radius))) for s in seeds
    ]
    return {
        "avg_degree": float(np.mean([s.avg_degree for s in collected])),
        "avg_clustering_coefficient": float(np.mean([s.avg_clustering_coefficient for s in collected])),
        "avg_shortest_path_length": float(np.mean([s.avg_shortest_path_length for s in collected])),
    }


def validate_stats(kind: GraphKind, num_devices: int = 100, seeds=range(20)) -> list[StatCheck]:
    observed = average_stats(kind, num_devices, seeds)
    return [
        StatCheck(kind, name, observed[name], ref, tol)
        for name, (ref, tol) in REFERENCE_STATS.get(kind, {}).items()
    ]


# ── Edge-list files ───────────────────────────────────────────────────────────

def save_edge_list(g: Graph, path: Path) -> Path:
    lines = [f"K={g.num_devices}"] + [f"{u} {v}" for u, v in g.edges()]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_edge_list(path: Path) -> Graph:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("K="):
        raise ValueError(f"{path}:1: expected header 'K=<n>'")
    try:
        num_devices = int(lines[0][2:])
    except ValueError:
        raise ValueError(f"{path}:1: invalid device count {lines[0][2:]!r}") from None
    edges: list[tuple[int, int]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ValueError(f"{path}:{line_no}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(num_devices, edges)
