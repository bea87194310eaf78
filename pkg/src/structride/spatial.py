"""Equirectangular projection, network speed proxy, and an n-by-n grid index
for constant-time retrieval of members near a node."""

from __future__ import annotations

import math

from .roadnet import RoadNetwork


class Projection:
    """Local Euclidean plane: x = (lon - lon0) * cos(lat0), y = lat - lat0,
    anchored at the dataset centroid. Units are degrees."""

    def __init__(self, lon0: float, lat0: float) -> None:
        self.lon0 = lon0
        self.lat0 = lat0
        self.cos_lat0 = math.cos(math.radians(lat0))

    @classmethod
    def for_network(cls, net: RoadNetwork) -> "Projection":
        if net.num_nodes == 0:
            raise ValueError("cannot project an empty network")
        lon0 = sum(c[0] for c in net.coords.values()) / net.num_nodes
        lat0 = sum(c[1] for c in net.coords.values()) / net.num_nodes
        return cls(lon0, lat0)

    def xy(self, lon: float, lat: float) -> tuple[float, float]:
        return (lon - self.lon0) * self.cos_lat0, lat - self.lat0

    def node_xy(self, net: RoadNetwork, node: int) -> tuple[float, float]:
        lon, lat = net.coords[node]
        return self.xy(lon, lat)


def speed_proxy(net: RoadNetwork, proj: Projection, percentile: float = 0.99) -> float:
    """Percentile of straight-line edge speed in projected degrees per ms.

    Converts time radii to coordinate distance for grid queries. Zero-time
    edges are skipped; a network with no positive-time edge gets +inf, which
    range_query treats as "return everything".
    """
    speeds = []
    for u, v, w in net.edges():
        if w <= 0:
            continue
        ux, uy = proj.node_xy(net, u)
        vx, vy = proj.node_xy(net, v)
        speeds.append(math.hypot(vx - ux, vy - uy) / w)
    if not speeds:
        return math.inf
    speeds.sort()
    idx = min(len(speeds) - 1, int(len(speeds) * percentile))
    return speeds[idx]


class GridIndex:
    """n x n buckets over the projected bounding box of the network's nodes.

    Members are opaque integer ids living at a node each; range queries return
    a superset of the members within the radius (MBR filter, false positives
    expected and re-checked downstream).
    """

    def __init__(self, net: RoadNetwork, n: int, proj: Projection | None = None) -> None:
        if n < 1:
            raise ValueError("grid resolution must be >= 1")
        if net.num_nodes == 0:
            raise ValueError("cannot index an empty network")
        self.net = net
        self.n = n
        self.proj = proj if proj is not None else Projection.for_network(net)
        xs, ys = [], []
        for node in net.coords:
            x, y = self.proj.node_xy(net, node)
            xs.append(x)
            ys.append(y)
        self.min_x, self.max_x = min(xs), max(xs)
        self.min_y, self.max_y = min(ys), max(ys)
        self._span_x = self.max_x - self.min_x
        self._span_y = self.max_y - self.min_y
        self._buckets: dict[tuple[int, int], set[int]] = {}
        self._where: dict[int, tuple[int, int]] = {}
        self._node_of: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._where)

    def _axis_cell(self, value: float, lo: float, span: float) -> int:
        if span <= 0:
            return 0
        cell = int((value - lo) / span * self.n)
        return min(max(cell, 0), self.n - 1)

    def cell_of_xy(self, x: float, y: float) -> tuple[int, int]:
        return (
            self._axis_cell(x, self.min_x, self._span_x),
            self._axis_cell(y, self.min_y, self._span_y),
        )

    def cell_of_node(self, node: int) -> tuple[int, int]:
        x, y = self.proj.node_xy(self.net, node)
        return self.cell_of_xy(x, y)

    def update(self, member: int, node: int) -> None:
        """Insert a new member or move an existing one to `node`."""
        if node not in self.net.coords:
            raise KeyError(f"unknown node {node}")
        cell = self.cell_of_node(node)
        old = self._where.get(member)
        if old is not None and old != cell:
            self._buckets[old].discard(member)
            if not self._buckets[old]:
                del self._buckets[old]
        self._buckets.setdefault(cell, set()).add(member)
        self._where[member] = cell
        self._node_of[member] = node

    def remove(self, member: int) -> None:
        cell = self._where.pop(member, None)
        if cell is None:
            return
        self._buckets[cell].discard(member)
        if not self._buckets[cell]:
            del self._buckets[cell]
        self._node_of.pop(member, None)

    def members(self) -> set[int]:
        return set(self._where)

    def node_of(self, member: int) -> int:
        return self._node_of[member]

    def range_query(self, center_node: int, radius_ms: int, speed: float) -> set[int]:
        """Members within the MBR of `radius_ms` travel time around the node.

        Superset guarantee holds in projected straight-line distance for the
        given speed; exact feasibility is always re-checked by callers.
        """
        if center_node not in self.net.coords:
            raise KeyError(f"unknown node {center_node}")
        radius = max(radius_ms, 0) * speed
        if not math.isfinite(radius):
            return self.members()
        cx, cy = self.proj.node_xy(self.net, center_node)
        lo_col, lo_row = self.cell_of_xy(cx - radius, cy - radius)
        hi_col, hi_row = self.cell_of_xy(cx + radius, cy + radius)
        out: set[int] = set()
        # wide radii on fine grids: walking the occupied buckets beats
        # walking every cell of the search rectangle
        if (hi_col - lo_col + 1) * (hi_row - lo_row + 1) >= len(self._buckets):
            for (col, row), bucket in self._buckets.items():
                if lo_col <= col <= hi_col and lo_row <= row <= hi_row:
                    out |= bucket
            return out
        for col in range(lo_col, hi_col + 1):
            for row in range(lo_row, hi_row + 1):
                bucket = self._buckets.get((col, row))
                if bucket:
                    out |= bucket
        return out


def build_grid(net: RoadNetwork, n: int, proj: Projection | None = None) -> GridIndex:
    return GridIndex(net, n, proj)
