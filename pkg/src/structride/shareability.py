"""Shareability graph maintenance with angle pruning, loss evaluation,
supernode substitution, clique-partition bounds, and the expected sharing
probability integral."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .insertion import insert_request
from .model import Request, dropoff_point, pickup_point
from .roadnet import RoadNetwork
from .spatial import GridIndex, Projection


class ShareabilityGraph:
    """Undirected graph over live request ids; no self-loops."""

    def __init__(self) -> None:
        self._adj: dict[int, set[int]] = {}
        self._num_edges = 0

    def __contains__(self, rid: int) -> bool:
        return rid in self._adj

    def nodes(self) -> list[int]:
        return sorted(self._adj)

    @property
    def num_nodes(self) -> int:
        return len(self._adj)

    @property
    def num_edges(self) -> int:
        return self._num_edges

    def add_node(self, rid: int) -> None:
        self._adj.setdefault(rid, set())

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("self-loops are not allowed")
        if a not in self._adj or b not in self._adj:
            raise KeyError("both endpoints must be present")
        if b not in self._adj[a]:
            self._adj[a].add(b)
            self._adj[b].add(a)
            self._num_edges += 1

    def remove_node(self, rid: int) -> None:
        nbrs = self._adj.pop(rid, None)
        if nbrs is None:
            return
        for other in nbrs:
            self._adj[other].discard(rid)
        self._num_edges -= len(nbrs)

    def neighbors(self, rid: int) -> set[int]:
        return self._adj[rid]

    def degree(self, rid: int) -> int:
        return len(self._adj[rid])

    def has_edge(self, a: int, b: int) -> bool:
        return a in self._adj and b in self._adj[a]

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for a in sorted(self._adj):
            for b in self._adj[a]:
                if a < b:
                    out.append((a, b))
        return out

    def is_clique(self, ids) -> bool:
        ids = list(ids)
        for i, a in enumerate(ids):
            if a not in self._adj:
                return False
            for b in ids[i + 1:]:
                if b not in self._adj[a]:
                    return False
        return True

    def copy(self) -> "ShareabilityGraph":
        g = ShareabilityGraph()
        g._adj = {k: set(v) for k, v in self._adj.items()}
        g._num_edges = self._num_edges
        return g


def shareability_loss(graph: ShareabilityGraph, group) -> int:
    """Worst-member edge loss of committing the clique `group`: for each r,
    |common neighbors of the others| + deg(r) - |common neighbors of all| - 1,
    maximized over members. Singletons lose their degree."""
    ids = sorted(set(group))
    if not ids:
        raise ValueError("group must be nonempty")
    if not graph.is_clique(ids):
        raise ValueError(f"group {ids} is not a clique")
    if len(ids) == 1:
        return graph.degree(ids[0])
    inter_all = set.intersection(*(graph.neighbors(r) for r in ids))
    best = None
    for r in ids:
        inter_rest = set.intersection(*(graph.neighbors(v) for v in ids if v != r))
        val = len(inter_rest) + graph.degree(r) - len(inter_all) - 1
        if best is None or val > best:
            best = val
    return best


def substitute_supernode(graph: ShareabilityGraph, group) -> ShareabilityGraph:
    """New graph with the clique collapsed into one node (id = min of the
    group) adjacent to the members' common outside neighbors."""
    ids = sorted(set(group))
    if not ids:
        raise ValueError("group must be nonempty")
    if not graph.is_clique(ids):
        raise ValueError(f"group {ids} is not a clique")
    common = set.intersection(*(graph.neighbors(r) for r in ids)) - set(ids)
    out = graph.copy()
    for rid in ids:
        out.remove_node(rid)
    super_id = ids[0]
    out.add_node(super_id)
    for other in sorted(common):
        out.add_edge(super_id, other)
    return out


def angle_pruned(net: RoadNetwork, proj: Projection, r_a: Request, r_b: Request, delta_rad: float) -> bool:
    """True iff the angle at r_b's source between the two destinations exceeds
    delta/2 in projected space. Degenerate zero-length vectors never prune."""
    bx, by = proj.node_xy(net, r_b.s)
    ax, ay = proj.node_xy(net, r_a.e)
    cx, cy = proj.node_xy(net, r_b.e)
    ux, uy = ax - bx, ay - by
    vx, vy = cx - bx, cy - by
    nu = math.hypot(ux, uy)
    nv = math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        return False
    cos_t = (ux * vx + uy * vy) / (nu * nv)
    theta = math.acos(min(1.0, max(-1.0, cos_t)))
    return theta > delta_rad / 2


def is_shareable(net: RoadNetwork, r_a: Request, r_b: Request) -> bool:
    """Feasible joint schedule with r_a's source first, probed by an idealized
    vehicle sitting at s_a at time max(t_a, t_b). Capacity checks are left to
    insertion into a real vehicle."""
    t0 = max(r_a.t, r_b.t)
    base = (pickup_point(r_a), dropoff_point(r_a))
    return insert_request(
        net, base, r_a.s, t0,
        capacity=r_a.n + r_b.n, base_occupancy=0, req=r_b,
        min_pickup_slot=1,
    ) is not None


@dataclass
class GraphCounters:
    candidates: int = 0
    bound_skipped: int = 0
    angle_pruned: int = 0
    probes: int = 0
    edges_added: int = 0

    def merge(self, other: "GraphCounters") -> None:
        self.candidates += other.candidates
        self.bound_skipped += other.bound_skipped
        self.angle_pruned += other.angle_pruned
        self.probes += other.probes
        self.edges_added += other.edges_added


def update_graph(
    net: RoadNetwork,
    graph: ShareabilityGraph,
    requests: dict,
    new_rids,
    delta_rad: float,
    grid: GridIndex | None = None,
    proj: Projection | None = None,
    speed: float = math.inf,
    counters: GraphCounters | None = None,
) -> GraphCounters:
    """Add each new request and its surviving edges to existing nodes.

    Candidates come from the grid (radius = the largest pickup slack among
    live requests), then a per-pair straight-line bound and the angle rule run
    before the two insertion probes. The spatial filters are calibrated by the
    speed proxy, so they are near-supersets of the true pair set; the angle
    rule is the only filter meant to drop genuinely shareable pairs. Pass no
    proj for the exact unfiltered builder.
    """
    c = counters if counters is not None else GraphCounters()
    live_slack = 0
    for rid in graph.nodes():
        r = requests[rid]
        live_slack = max(live_slack, r.d - r.trip_cost - r.t)
    for rid in sorted(new_rids):
        r_new = requests[rid]
        graph.add_node(rid)
        slack_new = r_new.d - r_new.trip_cost - r_new.t
        if grid is not None and proj is not None:
            radius_ms = max(slack_new, live_slack)
            cand = grid.range_query(r_new.s, radius_ms, speed)
        else:
            cand = set(graph.nodes())
        for other in sorted(cand):
            if other == rid or other not in graph or graph.has_edge(rid, other):
                continue
            r_old = requests[other]
            c.candidates += 1
            t0 = max(r_new.t, r_old.t)
            slack_a = r_new.pickup_ddl - t0
            slack_b = r_old.pickup_ddl - t0
            if proj is not None and math.isfinite(speed):
                ax, ay = proj.node_xy(net, r_new.s)
                bx, by = proj.node_xy(net, r_old.s)
                if math.hypot(bx - ax, by - ay) > speed * max(slack_a, slack_b, 0):
                    c.bound_skipped += 1
                    continue
            if proj is not None and angle_pruned(net, proj, r_new, r_old, delta_rad):
                c.angle_pruned += 1
                continue
            c.probes += 1
            ok = is_shareable(net, r_new, r_old)
            if not ok:
                c.probes += 1
                ok = is_shareable(net, r_old, r_new)
            if ok:
                graph.add_edge(rid, other)
                c.edges_added += 1
        live_slack = max(live_slack, slack_new)
    return c


def clique_partition_upper(n: int, e: int) -> int:
    """Closed-form upper bound on the clique partition number: the formula is
    reported unclamped even where it exceeds n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= e <= n * (n - 1) // 2:
        raise ValueError(f"e={e} out of range for n={n}")
    v = 4 * n * n - 4 * n - 8 * e + 1
    return (1 + math.isqrt(v)) // 2


def clique_number_estimate(n: int, eta: float) -> float:
    """Largest-clique estimate for a power-law degree graph: constant 3 when
    eta >= 2, else n^(1-eta/2) * (ln n)^(-eta/2) with unit constant."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if n <= 1:
        return 1.0
    if eta >= 2:
        return 3.0
    return max(1.0, n ** (1 - eta / 2) * math.log(n) ** (-eta / 2))


def capped_partition_upper(n: int, e: int, eta: float, k: int) -> int:
    """Partition bound adjusted for vehicle capacity k: a clique may need
    ceil(omega/k) vehicles when groups are capped at k riders."""
    if k < 1:
        raise ValueError("capacity must be >= 1")
    omega = clique_number_estimate(n, eta)
    return clique_partition_upper(n, e) * math.ceil(omega / k)


@dataclass(frozen=True)
class LogNormalFit:
    mu: float     # mean of ln(trip seconds)
    sigma: float
    gamma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.gamma <= 1:
            raise ValueError("gamma must be > 1")


def expected_sharing_probability(fit: LogNormalFit, delta_rad: float, abs_tol: float = 1e-4) -> float:
    """Probability that a random trip pair at angle threshold delta admits a
    detour-feasible share, under log-normal trip lengths.

    Outer integral over the trip length x (substituted y = ln x, so the weight
    is Gaussian); inner integrals are the log-normal CDF in closed form. The
    two feasibility cases overlap, so their union is taken, keeping the result
    in [0, 1].
    """
    if not 0 <= delta_rad <= math.pi:
        raise ValueError("delta must be in [0, pi]")
    g = fit.gamma
    half = delta_rad / 2
    # g(c) = a_low * c (share along the way), h(c) = a_high * c (share beyond)
    a_low = 1.0 / (math.cos(half) ** 2 / g + math.sin(half) ** 2 / (g - 1))
    a_high = 2.0 * (1.0 - math.cos(delta_rad)) / (g - 1)
    mu, sigma = fit.mu, fit.sigma
    sqrt2 = math.sqrt(2.0)
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    # both bounds are linear in the half-length c, so the dominance test is
    # independent of c and the inner CDFs take log arguments directly
    if a_low >= a_high:
        return 1.0
    ln_low = math.log(a_low)
    ln_high = math.log(a_high)
    ln_half = math.log(0.5)

    def cdf_at_log(ln_y: float) -> float:
        return 0.5 * (1.0 + math.erf((ln_y - mu) / (sigma * sqrt2)))

    def integrand(y: float) -> float:
        z = (y - mu) / sigma
        if abs(z) > 40.0:
            return 0.0
        density = norm * math.exp(-0.5 * z * z)
        ln_c = y + ln_half
        inner = cdf_at_log(ln_low + ln_c) + 1.0 - cdf_at_log(ln_high + ln_c)
        return density * inner

    value, err = quad(integrand, -math.inf, math.inf, epsabs=abs_tol / 4, limit=200)
    if err > abs_tol:
        raise ArithmeticError(f"quadrature reached abs error {err:.2e} > {abs_tol:.2e}")
    return min(max(value, 0.0), 1.0)


def hill_eta(values, k: int | None = None) -> float | None:
    """Hill estimate of the power-law exponent of a sample's upper tail;
    None when the sample is too small or degenerate. Diagnostic only."""
    vals = sorted((float(v) for v in values if v > 0), reverse=True)
    if len(vals) < 3:
        return None
    if k is None:
        k = max(1, len(vals) // 10)
    k = min(k, len(vals) - 1)
    total = sum(math.log(vals[i] / vals[k]) for i in range(k))
    if total <= 0:
        return None
    return 1.0 + k / total
