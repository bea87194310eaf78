"""Seeded synthetic demand: Poisson arrivals, log-normal trip durations, and
optional hotspot-clustered origins. Also provides small lattice networks for
demos and tests."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .model import Vehicle
from .roadnet import MS_PER_S, RoadNetwork


@dataclass(frozen=True)
class Hotspot:
    center_node: int
    spread_s: float
    weight: float = 1.0


@dataclass
class WorkloadSpec:
    count: int
    rate_per_s: float
    trip_mu: float       # mean of ln(trip seconds)
    trip_sigma: float
    seed: int = 0
    hotspot_frac: float = 0.0
    hotspots: list[Hotspot] = field(default_factory=list)
    max_riders: int = 1

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.rate_per_s <= 0:
            raise ValueError("rate_per_s must be > 0")
        if self.trip_sigma <= 0:
            raise ValueError("trip_sigma must be > 0")
        if not 0 <= self.hotspot_frac <= 1:
            raise ValueError("hotspot_frac must be in [0, 1]")
        if self.hotspot_frac > 0 and not self.hotspots:
            raise ValueError("hotspot_frac > 0 needs at least one hotspot")
        if self.max_riders < 1:
            raise ValueError("max_riders must be >= 1")


def load_workload_spec(path) -> tuple[WorkloadSpec, Path, Path]:
    """Spec plus the network paths it points at (relative to the TOML file)."""
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    base = path.parent
    net = doc.get("network", {})
    wl = doc.get("workload", {})
    for key in ("nodes", "edges"):
        if key not in net:
            raise ValueError(f"[network] must set {key}")
    for key in ("count", "rate_per_s", "trip_mu", "trip_sigma"):
        if key not in wl:
            raise ValueError(f"[workload] must set {key}")
    hotspots = [
        Hotspot(int(h["center_node"]), float(h["spread_s"]), float(h.get("weight", 1.0)))
        for h in wl.get("hotspots", [])
    ]
    spec = WorkloadSpec(
        count=int(wl["count"]),
        rate_per_s=float(wl["rate_per_s"]),
        trip_mu=float(wl["trip_mu"]),
        trip_sigma=float(wl["trip_sigma"]),
        seed=int(wl.get("seed", 0)),
        hotspot_frac=float(wl.get("hotspot_frac", 0.0)),
        hotspots=hotspots,
        max_riders=int(wl.get("max_riders", 1)),
    )
    def _p(v: str) -> Path:
        p = Path(v)
        return p if p.is_absolute() else base / p
    return spec, _p(net["nodes"]), _p(net["edges"])


@dataclass(frozen=True)
class RawRequest:
    id: int
    src_node: int
    dst_node: int
    riders: int
    release_s: float


def _hotspot_source(net: RoadNetwork, rng: random.Random, spec: WorkloadSpec) -> int:
    hs = rng.choices(spec.hotspots, weights=[h.weight for h in spec.hotspots])[0]
    ring = net.costs_from(hs.center_node, cutoff_ms=int(round(hs.spread_s * MS_PER_S)))
    nodes = sorted(ring)
    return nodes[rng.randrange(len(nodes))]


def _destination(net: RoadNetwork, rng: random.Random, src: int, mu: float, sigma: float) -> int | None:
    """Node whose travel time from src best matches a log-normal draw; a few
    draws are tried before giving up on this source."""
    for _ in range(50):
        length_ms = rng.lognormvariate(mu, sigma) * MS_PER_S
        lo, hi = 0.8 * length_ms, 1.2 * length_ms
        ring = net.costs_from(src, cutoff_ms=int(hi) + 1)
        best = None
        for nid, cost in ring.items():
            if nid == src or cost < lo or cost > hi:
                continue
            score = (abs(cost - length_ms), nid)
            if best is None or score < best:
                best = score
        if best is not None:
            return best[1]
    return None


def generate_requests(net: RoadNetwork, spec: WorkloadSpec) -> list[RawRequest]:
    rng = random.Random(spec.seed)
    nodes = sorted(net.nodes())
    out: list[RawRequest] = []
    t = 0.0
    rid = 0
    misses = 0
    while len(out) < spec.count:
        t += rng.expovariate(spec.rate_per_s)
        if spec.hotspot_frac > 0 and rng.random() < spec.hotspot_frac:
            src = _hotspot_source(net, rng, spec)
        else:
            src = nodes[rng.randrange(len(nodes))]
        dst = _destination(net, rng, src, spec.trip_mu, spec.trip_sigma)
        if dst is None:
            misses += 1
            if misses > 20 * max(spec.count, 1):
                raise ValueError(
                    "network too small for the requested trip length distribution")
            continue
        riders = 1 if spec.max_riders == 1 else rng.randint(1, spec.max_riders)
        out.append(RawRequest(rid, src, dst, riders, t))
        rid += 1
    return out


def write_requests_csv(path, rows: list[RawRequest]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "src_node", "dst_node", "riders", "release_s"])
        for r in rows:
            w.writerow([r.id, r.src_node, r.dst_node, r.riders, f"{r.release_s:.3f}"])


def generate_vehicles(net: RoadNetwork, fleet_size: int, capacity: int, seed: int) -> list[Vehicle]:
    rng = random.Random(seed)
    nodes = sorted(net.nodes())
    return [
        Vehicle(id=i, capacity=capacity, node=nodes[rng.randrange(len(nodes))])
        for i in range(fleet_size)
    ]


def make_lattice(nx: int, ny: int, lo_s: float = 20.0, hi_s: float = 60.0,
                 seed: int = 0, spacing_deg: float = 0.01):
    """Grid road network: returns (coords, edges) in the loader's units, with
    per-direction random edge times."""
    rng = random.Random(seed)
    coords: dict[int, tuple[float, float]] = {}
    for j in range(ny):
        for i in range(nx):
            coords[j * nx + i] = (i * spacing_deg, j * spacing_deg)
    edges: list[tuple[int, int, int]] = []
    def w() -> int:
        return int(round(rng.uniform(lo_s, hi_s) * MS_PER_S))
    for j in range(ny):
        for i in range(nx):
            nid = j * nx + i
            if i + 1 < nx:
                edges.append((nid, nid + 1, w()))
                edges.append((nid + 1, nid, w()))
            if j + 1 < ny:
                edges.append((nid, nid + nx, w()))
                edges.append((nid + nx, nid, w()))
    return coords, edges


def write_network_csv(nodes_path, edges_path, coords, edges) -> None:
    nodes_path, edges_path = Path(nodes_path), Path(edges_path)
    nodes_path.parent.mkdir(parents=True, exist_ok=True)
    edges_path.parent.mkdir(parents=True, exist_ok=True)
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "lon", "lat"])
        for nid in sorted(coords):
            lon, lat = coords[nid]
            w.writerow([nid, f"{lon:.6f}", f"{lat:.6f}"])
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["from", "to", "travel_time_s"])
        for u, v, w_ms in edges:
            w.writerow([u, v, f"{w_ms / MS_PER_S:.3f}"])
