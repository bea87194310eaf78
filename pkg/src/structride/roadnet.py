"""Directed road network with integer-millisecond travel times and a cached
exact shortest-path oracle (binary-heap Dijkstra behind a bounded LRU)."""

from __future__ import annotations

import csv
import heapq
from collections import OrderedDict
from typing import Iterable, Iterator

MS_PER_S = 1000

_MISS = object()


class CostCache:
    """LRU map (src, dst) -> travel time in ms, or None for unreachable.

    capacity == 0 disables caching. Correctness must never depend on hits:
    entries are only written with exact Dijkstra results.
    """

    def __init__(self, capacity: int = 1_000_000) -> None:
        if capacity < 0:
            raise ValueError("cache capacity must be >= 0")
        self.capacity = capacity
        self.hits = 0
        self.misses = 0
        self._data: OrderedDict[tuple[int, int], int | None] = OrderedDict()

    def __len__(self) -> int:
        return len(self._data)

    def lookup(self, key: tuple[int, int]):
        """Cached cost, or the module-private miss sentinel when absent."""
        value = self._data.get(key, _MISS)
        if value is _MISS:
            self.misses += 1
            return _MISS
        self._data.move_to_end(key)
        self.hits += 1
        return value

    def store(self, key: tuple[int, int], value: int | None) -> None:
        if self.capacity == 0:
            return
        if key in self._data:
            self._data.move_to_end(key)
        self._data[key] = value
        while len(self._data) > self.capacity:
            self._data.popitem(last=False)

    def clear(self) -> None:
        self._data.clear()


class RoadNetwork:
    """Immutable directed graph over dense integer node ids.

    Coordinates are (lon, lat) in degrees and feed only the grid index and
    angle computations; costs come exclusively from edge weights in ms.
    """

    def __init__(
        self,
        coords: dict[int, tuple[float, float]],
        edges: Iterable[tuple[int, int, int]],
        cache_entries: int = 1_000_000,
    ) -> None:
        self.coords = dict(coords)
        n = len(self.coords)
        if sorted(self.coords) != list(range(n)):
            raise ValueError("node ids must be dense 0..N-1")
        self._adj: dict[int, list[tuple[int, int]]] = {u: [] for u in self.coords}
        self._num_edges = 0
        for u, v, w in edges:
            if u not in self._adj or v not in self._adj:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
            w = int(w)
            if w < 0:
                raise ValueError(f"edge ({u}, {v}) has negative travel time")
            self._adj[u].append((v, w))
            self._num_edges += 1
        for nbrs in self._adj.values():
            nbrs.sort()
        self.cache = CostCache(cache_entries)
        self.query_count = 0

    @property
    def num_nodes(self) -> int:
        return len(self.coords)

    @property
    def num_edges(self) -> int:
        return self._num_edges

    def nodes(self) -> list[int]:
        return sorted(self.coords)

    def edges(self) -> Iterator[tuple[int, int, int]]:
        for u in sorted(self._adj):
            for v, w in self._adj[u]:
                yield u, v, w

    def has_node(self, u: int) -> bool:
        return u in self.coords

    def cost(self, src: int, dst: int) -> int | None:
        """Exact shortest travel time src -> dst in ms; None if unreachable."""
        if src not in self._adj:
            raise KeyError(f"unknown node {src}")
        if dst not in self._adj:
            raise KeyError(f"unknown node {dst}")
        if src == dst:
            return 0
        cached = self.cache.lookup((src, dst))
        if cached is not _MISS:
            return cached
        self.query_count += 1
        settled = self._dijkstra(src, dst)
        for node, d in settled.items():
            self.cache.store((src, node), d)
        found = settled.get(dst)
        if found is None:
            # Heap exhausted without settling dst: definitively unreachable.
            self.cache.store((src, dst), None)
        return found

    def _dijkstra(self, src: int, dst: int | None) -> dict[int, int]:
        """Settled distances from src; stops early once dst settles."""
        settled: dict[int, int] = {}
        best = {src: 0}
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in settled:
                continue
            settled[u] = d
            if u == dst:
                break
            for v, w in self._adj[u]:
                nd = d + w
                if v not in settled and (v not in best or nd < best[v]):
                    best[v] = nd
                    heapq.heappush(heap, (nd, v))
        return settled

    def costs_from(self, src: int, cutoff_ms: int | None = None) -> dict[int, int]:
        """All reachable node -> cost (ms) with cost <= cutoff_ms.

        Bypasses the cache; used for bulk ring searches.
        """
        if src not in self._adj:
            raise KeyError(f"unknown node {src}")
        settled: dict[int, int] = {}
        best = {src: 0}
        heap = [(0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in settled:
                continue
            settled[u] = d
            for v, w in self._adj[u]:
                nd = d + w
                if cutoff_ms is not None and nd > cutoff_ms:
                    continue
                if v not in settled and (v not in best or nd < best[v]):
                    best[v] = nd
                    heapq.heappush(heap, (nd, v))
        return settled


def _read_rows(path: str, expected_header: list[str]) -> Iterator[tuple[int, list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {expected_header}")
        if [h.strip() for h in header] != expected_header:
            raise ValueError(f"{path}: bad header {header}, expected {expected_header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(expected_header):
                raise ValueError(f"{path}:{lineno}: expected {len(expected_header)} fields, got {len(row)}")
            yield lineno, row


def load_network(nodes_path: str, edges_path: str, cache_entries: int = 1_000_000) -> RoadNetwork:
    """Build a RoadNetwork from nodes.csv (node_id,lon,lat) and edges.csv
    (from,to,travel_time_s). Seconds are converted to whole milliseconds."""
    coords: dict[int, tuple[float, float]] = {}
    for lineno, row in _read_rows(nodes_path, ["node_id", "lon", "lat"]):
        try:
            nid = int(row[0])
            lon, lat = float(row[1]), float(row[2])
        except ValueError:
            raise ValueError(f"{nodes_path}:{lineno}: malformed node row {row}")
        if nid in coords:
            raise ValueError(f"{nodes_path}:{lineno}: duplicate node id {nid}")
        coords[nid] = (lon, lat)
    edges: list[tuple[int, int, int]] = []
    for lineno, row in _read_rows(edges_path, ["from", "to", "travel_time_s"]):
        try:
            u, v = int(row[0]), int(row[1])
            secs = float(row[2])
        except ValueError:
            raise ValueError(f"{edges_path}:{lineno}: malformed edge row {row}")
        if u not in coords or v not in coords:
            raise ValueError(f"{edges_path}:{lineno}: edge ({u}, {v}) references an unknown node")
        if secs < 0:
            raise ValueError(f"{edges_path}:{lineno}: negative travel time {secs}")
        edges.append((u, v, int(round(secs * MS_PER_S))))
    try:
        return RoadNetwork(coords, edges, cache_entries=cache_entries)
    except ValueError as exc:
        raise ValueError(f"{nodes_path}: {exc}")
