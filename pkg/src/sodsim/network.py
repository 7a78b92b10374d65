"""Street network: directed graph over planar coordinates with cached
time-shortest (driving) and length-shortest (walking) path queries.

The same graph serves both modes; walking simply weights edges by length
and leaves speed conversion to the caller.
"""
from __future__ import annotations

import csv
import heapq
import logging
import math
from dataclasses import dataclass

from .errors import ConfigError

LOG = logging.getLogger(__name__)

_EPS = 1e-9


class NetworkError(ConfigError):
    """Malformed network input or impossible query."""


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    length_m: float
    time_s: float


@dataclass(frozen=True)
class PathResult:
    """A resolved shortest path: node sequence plus summed edge weights."""

    nodes: tuple[int, ...]
    distance_m: float
    time_s: float


class Network:
    """Immutable directed street graph.

    Node ids are arbitrary ints; coordinates are planar meters. All edge
    lengths and travel times must be strictly positive and the graph must be
    strongly connected (checked in :func:`load_network`). Query results are
    memoized per source node, so sharing one instance across replications is
    safe and cheap; all methods are read-only after construction.
    """

    def __init__(self, nodes: dict[int, tuple[float, float]], edges: list[Edge]):
        self.coords = dict(nodes)
        self.edges = list(edges)
        self._index = {nid: i for i, nid in enumerate(sorted(self.coords))}
        self._ids = sorted(self.coords)
        n = len(self._ids)
        self._fwd: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
        self._rev: list[list[tuple[int, float, float]]] = [[] for _ in range(n)]
        for e in self.edges:
            u, v = self._index[e.src], self._index[e.dst]
            self._fwd[u].append((v, e.time_s, e.length_m))
            self._rev[v].append((u, e.time_s, e.length_m))
        for adj in self._fwd:
            adj.sort()
        for adj in self._rev:
            adj.sort()
        # (weight_kind, source_index) -> (dist array, predecessor array)
        self._rows: dict[tuple[str, int], tuple[list[float], list[int]]] = {}
        self._legs: dict[tuple[int, int], PathResult] = {}
        self._leg_td: dict[tuple[int, int], tuple[float, float]] = {}
        self._walk_maps: dict[tuple[str, int], dict[int, float]] = {}

    # ------------------------------------------------------------------
    # low-level queries
    # ------------------------------------------------------------------

    def __contains__(self, node: int) -> bool:
        return node in self.coords

    @property
    def num_nodes(self) -> int:
        return len(self._ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def _check_node(self, node: int) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise NetworkError(f"unknown node id {node}") from None

    def _dijkstra(self, source_idx: int, kind: str) -> tuple[list[float], list[int]]:
        """Single-source Dijkstra with deterministic tie-breaking.

        When two equal-cost paths reach a node, the predecessor with the
        smaller node id wins, which makes reconstructed paths reproducible
        across runs and platforms.
        """
        key = (kind, source_idx)
        cached = self._rows.get(key)
        if cached is not None:
            return cached
        if kind == "time":
            adj, wpos = self._fwd, 1
        elif kind == "length":
            adj, wpos = self._fwd, 2
        elif kind == "length_rev":
            adj, wpos = self._rev, 2
        else:  # pragma: no cover - internal misuse
            raise ValueError(kind)
        n = len(self._ids)
        dist = [math.inf] * n
        pred = [-1] * n
        dist[source_idx] = 0.0
        heap: list[tuple[float, int]] = [(0.0, source_idx)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u] + _EPS:
                continue
            for entry in adj[u]:
                v = entry[0]
                nd = d + entry[wpos]
                if nd < dist[v] - _EPS:
                    dist[v] = nd
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
                elif abs(nd - dist[v]) <= _EPS and pred[v] >= 0 and u < pred[v]:
                    pred[v] = u
        self._rows[key] = (dist, pred)
        return dist, pred

    # ------------------------------------------------------------------
    # public API
    # ------------------------------------------------------------------

    def shortest_path(self, origin: int, destination: int) -> PathResult:
        """Fastest driving path from origin to destination.

        Raises :class:`NetworkError` if either node is unknown or the
        destination is unreachable.
        """
        cached = self._legs.get((origin, destination))
        if cached is not None:
            return cached
        o = self._check_node(origin)
        d = self._check_node(destination)
        if o == d:
            result = PathResult((origin,), 0.0, 0.0)
            self._legs[(origin, destination)] = result
            return result
        dist, pred = self._dijkstra(o, "time")
        if math.isinf(dist[d]):
            raise NetworkError(f"no path from {origin} to {destination}")
        idx_path = [d]
        while idx_path[-1] != o:
            idx_path.append(pred[idx_path[-1]])
        idx_path.reverse()
        length = 0.0
        time = 0.0
        for a, b in zip(idx_path, idx_path[1:]):
            hops = [(t, l) for v, t, l in self._fwd[a] if v == b]
            if not hops:  # pragma: no cover - pred chain always follows edges
                raise NetworkError("broken predecessor chain")
            t, l = min(hops)  # parallel edges: the minimal-time one was relaxed
            time += t
            length += l
        result = PathResult(tuple(self._ids[i] for i in idx_path), length, time)
        self._legs[(origin, destination)] = result
        return result

    def drive_time_s(self, origin: int, destination: int) -> float:
        o = self._check_node(origin)
        d = self._check_node(destination)
        t = self._dijkstra(o, "time")[0][d]
        if math.isinf(t):
            raise NetworkError(f"no path from {origin} to {destination}")
        return t

    def drive_leg(self, origin: int, destination: int) -> tuple[float, float]:
        """(time_s, distance_m) of the fastest driving path."""
        td = self._leg_td.get((origin, destination))
        if td is None:
            path = self.shortest_path(origin, destination)
            td = (path.time_s, path.distance_m)
            self._leg_td[(origin, destination)] = td
        return td

    def path_edges(self, origin: int, destination: int) -> list[tuple[int, float, float]]:
        """Fastest path broken into edges: (next_node, time_s, length_m) hops."""
        path = self.shortest_path(origin, destination)
        hops = []
        for a, b in zip(path.nodes, path.nodes[1:]):
            t, l = min((t, l) for v, t, l in self._fwd[self._index[a]] if v == b)
            hops.append((b, t, l))
        return hops

    def walk_distance(self, point: int, stop: int) -> float:
        """Network walking distance in meters from point to stop.

        Uses length-weighted shortest paths on the same graph; the caller
        applies a walking speed. Cached per stop, so batch lookups against a
        fixed stop set are O(1) after the first query.
        """
        p = self._check_node(point)
        s = self._check_node(stop)
        d = self._dijkstra(s, "length_rev")[0][p]
        if math.isinf(d):
            raise NetworkError(f"no walking path from {point} to {stop}")
        return d

    def walk_distances_to(self, stop: int) -> dict[int, float]:
        """Walking distance from every node toward ``stop`` (meters)."""
        s = self._check_node(stop)
        cached = self._walk_maps.get(("to", s))
        if cached is None:
            dist, _ = self._dijkstra(s, "length_rev")
            cached = {self._ids[i]: d for i, d in enumerate(dist) if not math.isinf(d)}
            self._walk_maps[("to", s)] = cached
        return cached

    def walk_distances_from(self, stop: int) -> dict[int, float]:
        """Walking distance from ``stop`` to every node (meters)."""
        s = self._check_node(stop)
        cached = self._walk_maps.get(("from", s))
        if cached is None:
            dist, _ = self._dijkstra(s, "length")
            cached = {self._ids[i]: d for i, d in enumerate(dist) if not math.isinf(d)}
            self._walk_maps[("from", s)] = cached
        return cached


def _strongly_connected(nodes: dict, fwd: dict[int, list[int]], rev: dict[int, list[int]]) -> bool:
    if not nodes:
        return False
    start = next(iter(nodes))
    for adj in (fwd, rev):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != len(nodes):
            return False
    return True


def load_network(edges_path, nodes_path) -> Network:
    """Load and validate a network from node/edge CSV files.

    Formats: nodes ``node_id,x_m,y_m``; edges ``from_id,to_id,length_m,
    travel_time_s``. Loading is atomic: any malformed row, dangling node
    reference, non-positive weight, or connectivity failure raises
    :class:`NetworkError` and nothing is returned.
    """
    nodes: dict[int, tuple[float, float]] = {}
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"node_id", "x_m", "y_m"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise NetworkError(f"node file must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                nid = int(row["node_id"])
                xy = (float(row["x_m"]), float(row["y_m"]))
            except (TypeError, ValueError) as exc:
                raise NetworkError(f"{nodes_path}:{lineno}: malformed node row") from exc
            if nid in nodes:
                raise NetworkError(f"{nodes_path}:{lineno}: duplicate node id {nid}")
            nodes[nid] = xy
    if not nodes:
        raise NetworkError(f"{nodes_path}: no nodes")

    edges: list[Edge] = []
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"from_id", "to_id", "length_m", "travel_time_s"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise NetworkError(f"edge file must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                e = Edge(
                    int(row["from_id"]),
                    int(row["to_id"]),
                    float(row["length_m"]),
                    float(row["travel_time_s"]),
                )
            except (TypeError, ValueError) as exc:
                raise NetworkError(f"{edges_path}:{lineno}: malformed edge row") from exc
            if e.src not in nodes or e.dst not in nodes:
                raise NetworkError(
                    f"{edges_path}:{lineno}: edge references unknown node "
                    f"({e.src} -> {e.dst})"
                )
            if e.length_m <= 0 or e.time_s <= 0:
                raise NetworkError(f"{edges_path}:{lineno}: non-positive edge weight")
            edges.append(e)

    fwd: dict[int, list[int]] = {n: [] for n in nodes}
    rev: dict[int, list[int]] = {n: [] for n in nodes}
    for e in edges:
        fwd[e.src].append(e.dst)
        rev[e.dst].append(e.src)
    if not _strongly_connected(nodes, fwd, rev):
        raise NetworkError("service area is not strongly connected")

    net = Network(nodes, edges)
    LOG.info("loaded network: %d nodes, %d edges", net.num_nodes, net.num_edges)
    return net
