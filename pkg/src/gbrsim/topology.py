"""Sensor deployment in a disc, communication graph, and hop-count heights.

Deployments are random but fully determined by their seed; everything
derived from the geometry (adjacency, heights) is deterministic, so a
topology can be serialized as geometry only and rebuilt bit-identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from collections import deque
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

UNREACHABLE = -1


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Deployment:
    """Sensor coordinates plus base stations, all inside the dispersal disc."""

    sensors: np.ndarray        # (n, 2) float64
    base_stations: np.ndarray  # (k, 2) float64
    radius: float
    seed: int

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)


@dataclass(frozen=True)
class Topology:
    """Immutable communication graph over a deployment.

    Adjacency is stored in CSR form with neighbor ids sorted ascending per
    node, which fixes the lowest-id tie-break used by the routing rules.
    `heights[i]` is the hop count to the closest base station, or
    UNREACHABLE when no path exists.
    """

    deployment: Deployment
    comm_radius: float
    nbr_indptr: np.ndarray   # (n+1,) int64
    nbr_ids: np.ndarray      # (total_degree,) int32
    lower_indptr: np.ndarray  # CSR of neighbors at strictly smaller height
    lower_ids: np.ndarray
    bs_adjacency: list[np.ndarray]  # per node, BS ids sorted by (distance, id)
    heights: np.ndarray      # (n,) int32

    @property
    def n_sensors(self) -> int:
        return self.deployment.n_sensors

    def neighbors(self, node: int) -> np.ndarray:
        return self.nbr_ids[self.nbr_indptr[node]:self.nbr_indptr[node + 1]]

    def lower_neighbors(self, node: int) -> np.ndarray:
        return self.lower_ids[self.lower_indptr[node]:self.lower_indptr[node + 1]]

    @property
    def reachable_ids(self) -> np.ndarray:
        return np.flatnonzero(self.heights != UNREACHABLE).astype(np.int32)

    @property
    def max_height(self) -> int:
        reach = self.heights[self.heights != UNREACHABLE]
        return int(reach.max()) if len(reach) else 0


def deploy_uniform_disc(n_sensors: int, radius: float,
                        bs_positions: Sequence[tuple[float, float]],
                        seed: int) -> Deployment:
    """Scatter sensors i.i.d. uniform over the disc of the given radius.

    Polar sampling with a square-root radial transform keeps the density
    uniform over area. Identical arguments produce identical layouts.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if len(bs_positions) == 0:
        raise ValueError("at least one base station position is required")
    if n_sensors < 0:
        raise ValueError(f"n_sensors must be non-negative, got {n_sensors}")

    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n_sensors))
    theta = 2.0 * math.pi * rng.random(n_sensors)
    sensors = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    base = np.asarray(bs_positions, dtype=np.float64).reshape(len(bs_positions), 2)
    if not np.isfinite(base).all():
        raise ValueError("base station coordinates must be finite")
    return Deployment(sensors=sensors, base_stations=base,
                      radius=float(radius), seed=int(seed))


def compute_heights(adjacency: Sequence[Sequence[int]],
                    bs_adjacency: Sequence[Sequence[int]]) -> np.ndarray:
    """Hop count from each node to the nearest base station.

    Multi-source BFS seeded with every node adjacent to a base station at
    height 1; nodes with no path are marked UNREACHABLE.
    """
    n = len(adjacency)
    heights = np.full(n, UNREACHABLE, dtype=np.int32)
    frontier: deque[int] = deque()
    for node in range(n):
        if len(bs_adjacency[node]) > 0:
            heights[node] = 1
            frontier.append(node)
    while frontier:
        node = frontier.popleft()
        next_h = heights[node] + 1
        for nb in adjacency[node]:
            if heights[nb] == UNREACHABLE:
                heights[nb] = next_h
                frontier.append(nb)
    return heights


def _adjacency_csr(n: int, pairs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric CSR from undirected pairs, neighbor ids ascending per node."""
    if len(pairs) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int32)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst.astype(np.int32)


def _lower_csr(indptr: np.ndarray, ids: np.ndarray,
               heights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Restrict a CSR adjacency to neighbors at strictly smaller height."""
    n = len(indptr) - 1
    if len(ids) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int32)
    src = np.repeat(np.arange(n), np.diff(indptr))
    keep = (heights[ids] != UNREACHABLE) & (heights[src] != UNREACHABLE) \
        & (heights[ids] < heights[src])
    low_src, low_ids = src[keep], ids[keep]
    low_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(low_src, minlength=n), out=low_indptr[1:])
    return low_indptr, low_ids.astype(np.int32)


def build_topology(deployment: Deployment, comm_radius: float) -> Topology:
    """Communication graph: links between all pairs at distance <= comm_radius.

    The boundary is inclusive (closed ball), both for sensor-sensor and
    sensor-BS links. Heights are filled by compute_heights.
    """
    if comm_radius <= 0:
        raise ValueError(f"comm_radius must be positive, got {comm_radius}")
    n = deployment.n_sensors
    sensors = deployment.sensors

    if n > 0:
        tree = cKDTree(sensors)
        pairs = tree.query_pairs(comm_radius, output_type="ndarray")
    else:
        pairs = np.zeros((0, 2), dtype=np.int64)
    indptr, ids = _adjacency_csr(n, pairs)

    bs_adjacency: list[np.ndarray] = [np.zeros(0, dtype=np.int32) for _ in range(n)]
    if n > 0:
        near: list[list[tuple[float, int]]] = [[] for _ in range(n)]
        for j, pos in enumerate(deployment.base_stations):
            d = np.hypot(sensors[:, 0] - pos[0], sensors[:, 1] - pos[1])
            for node in np.flatnonzero(d <= comm_radius):
                near[node].append((float(d[node]), j))
        for node, hits in enumerate(near):
            if hits:
                hits.sort()  # nearest first, lowest BS id on ties
                bs_adjacency[node] = np.array([j for _, j in hits], dtype=np.int32)

    adjacency_view = [ids[indptr[i]:indptr[i + 1]] for i in range(n)]
    heights = compute_heights(adjacency_view, bs_adjacency)
    lower_indptr, lower_ids = _lower_csr(indptr, ids, heights)

    return Topology(deployment=deployment, comm_radius=float(comm_radius),
                    nbr_indptr=indptr, nbr_ids=ids,
                    lower_indptr=lower_indptr, lower_ids=lower_ids,
                    bs_adjacency=bs_adjacency, heights=heights)


def topology_to_dict(topology: Topology) -> dict:
    """Geometry-only representation; adjacency and heights are rebuilt on load."""
    dep = topology.deployment
    return {
        "radius": dep.radius,
        "seed": dep.seed,
        "comm_radius": topology.comm_radius,
        "sensors": dep.sensors.tolist(),
        "base_stations": dep.base_stations.tolist(),
    }


def topology_from_dict(doc: dict) -> Topology:
    sensors = np.asarray(doc["sensors"], dtype=np.float64).reshape(-1, 2)
    base = np.asarray(doc["base_stations"], dtype=np.float64).reshape(-1, 2)
    dep = Deployment(sensors=sensors, base_stations=base,
                     radius=float(doc["radius"]), seed=int(doc["seed"]))
    return build_topology(dep, float(doc["comm_radius"]))


def save_topology(topology: Topology, path, extra: dict | None = None) -> None:
    doc = topology_to_dict(topology)
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_topology(path) -> Topology:
    with open(path, encoding="utf-8") as fh:
        return topology_from_dict(json.load(fh))
