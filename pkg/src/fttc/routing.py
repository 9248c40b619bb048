"""Radio graph construction and hello-packet shortest paths to the sink."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import Position, SensorNode

#: Vertex id of the base station in a :class:`RadioGraph`.
BASE = -1


@dataclass
class RadioGraph:
    """Undirected weighted graph over node ids plus the :data:`BASE` vertex.

    ``adj[u][v]`` is the Euclidean edge length; the structure is kept
    symmetric by :meth:`add_edge`.
    """

    positions: dict[int, Position] = field(default_factory=dict)
    adj: dict[int, dict[int, float]] = field(default_factory=dict)

    def add_vertex(self, v: int, pos: Position | None = None):
        self.adj.setdefault(v, {})
        if pos is not None:
            self.positions[v] = pos

    def add_edge(self, u: int, v: int, w: float):
        if w < 0:
            raise ValueError("edge weights must be non-negative")
        self.add_vertex(u)
        self.add_vertex(v)
        self.adj[u][v] = w
        self.adj[v][u] = w

    @property
    def node_ids(self) -> list[int]:
        return sorted(v for v in self.adj if v != BASE)


@dataclass(frozen=True)
class Trajectory:
    """A node's path to the sink; the sink itself is an implicit terminus."""

    t_id: int
    node_path: tuple[int, ...]
    point_path: tuple[Position, ...]
    cost: float

    def __len__(self):
        return len(self.node_path)


class Unreachable(Exception):
    pass


def build_graph(nodes: Sequence[SensorNode], base: Position, r0: float,
                bs_range: float | None = None) -> RadioGraph:
    """Connect alive nodes lying within ``r0`` of each other.

    The sink links to every alive node within ``bs_range`` of it. When
    ``bs_range`` is None it becomes the nearest alive node's distance to the
    sink plus ``r0``, i.e. a gateway band one radio hop deep on the sink side.
    """
    if not nodes:
        raise ValueError("need at least one node")
    alive = [n for n in nodes if n.alive]
    g = RadioGraph()
    g.add_vertex(BASE, base)
    for n in alive:
        g.add_vertex(n.id, n.position)
    if not alive:
        return g
    ids = [n.id for n in alive]
    xy = np.array([(n.position.x, n.position.y) for n in alive])
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    for i, j in zip(*np.nonzero(np.triu(d <= r0, k=1))):
        g.add_edge(ids[i], ids[j], float(d[i, j]))
    to_base = np.hypot(xy[:, 0] - base.x, xy[:, 1] - base.y)
    radius = bs_range if bs_range is not None else to_base.min() + r0
    for i in np.flatnonzero(to_base <= radius):
        g.add_edge(ids[i], BASE, float(to_base[i]))
    return g


def _reverse_dijkstra(graph: RadioGraph) -> dict[int, tuple[float, int, tuple[int, ...]]]:
    # Labels are (cost, hops, path-to-base); the order is preserved when a
    # vertex is prepended, so settling labels in heap order is exact.
    best: dict[int, tuple[float, int, tuple[int, ...]]] = {}
    heap = [(0.0, 0, ())]
    while heap:
        cost, hops, path = heapq.heappop(heap)
        v = path[0] if path else BASE
        if v in best:
            continue
        best[v] = (cost, hops, path)
        for u, w in graph.adj.get(v, {}).items():
            if u in best or u == BASE:
                continue
            heapq.heappush(heap, (cost + w, hops + 1, (u,) + path))
    return best


def _trajectory(graph: RadioGraph, label) -> Trajectory:
    _, _, path = label
    hops = list(path) + [BASE]
    cost = math.fsum(graph.adj[a][b] for a, b in zip(hops, hops[1:]))
    pts = tuple(graph.positions[v] for v in path) if all(v in graph.positions for v in path) else ()
    return Trajectory(path[0], tuple(path), pts, cost)


def shortest_path(graph: RadioGraph, source: int) -> Trajectory:
    """Minimum-length path from ``source`` to the sink.

    Ties prefer fewer hops, then the lexicographically smallest id sequence.
    Raises :class:`Unreachable` if the sink cannot be reached.
    """
    if source not in graph.adj or source == BASE:
        raise KeyError(source)
    best = _reverse_dijkstra(graph)
    if source not in best:
        raise Unreachable(source)
    return _trajectory(graph, best[source])


def all_trajectories(graph: RadioGraph) -> tuple[list[Trajectory], list[int]]:
    """Trajectories for every reachable node (by id) and the unreachable ids."""
    best = _reverse_dijkstra(graph)
    trajs, unreachable = [], []
    for v in graph.node_ids:
        if v in best:
            trajs.append(_trajectory(graph, best[v]))
        else:
            unreachable.append(v)
    return trajs, unreachable
