"""Batched simulation loop: release, graph maintenance, dispatch, expiry,
and per-batch accounting."""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field

from .dispatch import BatchOutcome, prunegdp_batch, sard_batch, unified_cost_ms
from .model import Request, Vehicle, check_feasible
from .roadnet import MS_PER_S, RoadNetwork
from .shareability import GraphCounters, ShareabilityGraph, update_graph
from .spatial import Projection, build_grid, speed_proxy


class AuditError(AssertionError):
    """A dispatch invariant was violated (audit mode only)."""


@dataclass
class BatchRow:
    batch_idx: int
    t_start_ms: int
    served: int
    expired: int
    unified_cost_s: float   # cumulative objective after this batch
    wall_ms: float


@dataclass
class SimResult:
    rows: list[BatchRow]
    assigned: dict[int, int]           # rid -> vid, over the whole run
    expired: list[int]
    requests_total: int
    driven_ms: int
    unserved_trip_ms: int
    unified_cost_s: float
    service_rate: float
    counters: dict = field(default_factory=dict)


class Simulation:
    """One full run over a fixed request set.

    Every `batch_ms` the clock jumps to T: vehicles execute way-points reached
    by T, requests released before T join the pool, the chosen algorithm
    assigns what it can, and requests whose waiting budget ran out leave
    unserved. With `audit` set, each batch is checked for schedule
    feasibility, clique groups, and single assignment.
    """

    def __init__(
        self,
        net: RoadNetwork,
        requests: dict[int, Request],
        vehicles,
        algorithm: str = "sard",
        batch_ms: int = 5_000,
        penalty: float = 10.0,
        alpha: float = 1.0,
        delta_rad: float = math.pi,
        grid_n: int = 128,
        include_deadhead: bool = True,
        audit: bool = False,
        trace_sink=None,
    ) -> None:
        if algorithm not in ("sard", "prunegdp"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        self.net = net
        self.requests = {rid: requests[rid] for rid in sorted(requests)}
        if not isinstance(vehicles, dict):
            vehicles = {v.id: v for v in vehicles}
        self.vehicles = {vid: vehicles[vid] for vid in sorted(vehicles)}
        self.algorithm = algorithm
        self.batch_ms = int(batch_ms)
        self.penalty = penalty
        self.alpha = alpha
        self.delta_rad = delta_rad
        self.include_deadhead = include_deadhead
        self.audit = audit
        self.trace_sink = trace_sink

        self.proj = Projection.for_network(net)
        self.speed = speed_proxy(net, self.proj)
        self.vgrid = build_grid(net, grid_n, self.proj)
        for vid, veh in self.vehicles.items():
            self.vgrid.update(vid, veh.node)
        self.rgrid = build_grid(net, grid_n, self.proj)
        self.graph = ShareabilityGraph()
        self.gcounters = GraphCounters()
        self.grid_n = grid_n

    # -- audit helpers -------------------------------------------------

    def _audit_groups(self, outcome: BatchOutcome) -> None:
        for vid, key in outcome.groups:
            if len(key) > 1 and not self.graph.is_clique(key):
                raise AuditError(f"vehicle {vid} committed non-clique group {key}")

    def _audit_state(self, assigned_all: dict[int, int], outcome: BatchOutcome, now: int) -> None:
        for rid, vid in outcome.assigned.items():
            prior = assigned_all.get(rid)
            if prior is not None:
                raise AuditError(f"request {rid} assigned to {vid} and {prior}")
        seen: dict[int, int] = {}
        for vid, veh in self.vehicles.items():
            verdict = check_feasible(self.net, veh.schedule, veh)
            if verdict is not None:
                raise AuditError(f"vehicle {vid} schedule violates {verdict}")
            for rid in set(veh.assigned) | set(veh.onboard):
                if rid in seen:
                    raise AuditError(f"request {rid} held by vehicles {seen[rid]} and {vid}")
                seen[rid] = vid

    # -- main loop -----------------------------------------------------

    def run(self) -> SimResult:
        pending = [self.requests[rid] for rid in self.requests]
        pending.sort(key=lambda r: (r.t, r.id))
        next_release = 0
        pool: set[int] = set()
        assigned_all: dict[int, int] = {}
        expired_all: list[int] = []
        unserved_trip_ms = 0
        rows: list[BatchRow] = []
        rounds = 0
        proposals = 0
        now = 0

        def busy() -> bool:
            return (next_release < len(pending) or bool(pool)
                    or any(v.schedule for v in self.vehicles.values()))

        while busy():
            t_wall = _time.perf_counter()
            now += self.batch_ms
            for vid, veh in self.vehicles.items():
                veh.advance_to(self.net, now)
                self.vgrid.update(vid, veh.node)

            new_rids = []
            while next_release < len(pending) and pending[next_release].t < now:
                req = pending[next_release]
                next_release += 1
                pool.add(req.id)
                new_rids.append(req.id)
            if self.algorithm == "sard":
                for rid in new_rids:
                    self.rgrid.update(rid, self.requests[rid].s)
                update_graph(self.net, self.graph, self.requests, new_rids,
                             self.delta_rad, self.rgrid, self.proj, self.speed,
                             self.gcounters)
                outcome = sard_batch(self.net, self.graph, self.requests, pool,
                                     self.vehicles, now, self.vgrid, self.speed,
                                     self.include_deadhead, self.trace_sink)
            else:
                outcome = prunegdp_batch(self.net, self.requests, pool,
                                         self.vehicles, now, self.vgrid,
                                         self.speed, self.include_deadhead)
            rounds += outcome.rounds
            proposals += outcome.proposals

            if self.audit and self.algorithm == "sard":
                self._audit_groups(outcome)
            for rid in outcome.assigned:
                pool.discard(rid)
                if self.algorithm == "sard":
                    self.rgrid.remove(rid)
                    self.graph.remove_node(rid)
            if self.audit:
                self._audit_state(assigned_all, outcome, now)
            assigned_all.update(outcome.assigned)

            expired_now = sorted(rid for rid in pool if now > self.requests[rid].expiry)
            for rid in expired_now:
                pool.discard(rid)
                if self.algorithm == "sard":
                    self.rgrid.remove(rid)
                    self.graph.remove_node(rid)
                unserved_trip_ms += self.requests[rid].trip_cost
                expired_all.append(rid)

            driven_ms = sum(v.driven_ms for v in self.vehicles.values())
            cum_cost = unified_cost_ms(self.alpha, self.penalty, driven_ms,
                                       unserved_trip_ms) / MS_PER_S
            rows.append(BatchRow(
                batch_idx=len(rows),
                t_start_ms=now - self.batch_ms,
                served=len(outcome.assigned),
                expired=len(expired_now),
                unified_cost_s=cum_cost,
                wall_ms=(_time.perf_counter() - t_wall) * 1000.0,
            ))

        driven_ms = sum(v.driven_ms for v in self.vehicles.values())
        total = len(self.requests)
        served = len(assigned_all)
        result = SimResult(
            rows=rows,
            assigned=assigned_all,
            expired=expired_all,
            requests_total=total,
            driven_ms=driven_ms,
            unserved_trip_ms=unserved_trip_ms,
            unified_cost_s=unified_cost_ms(self.alpha, self.penalty, driven_ms,
                                           unserved_trip_ms) / MS_PER_S,
            service_rate=(served / total) if total else 1.0,
            counters={
                "batches": len(rows),
                "rounds": rounds,
                "proposals": proposals,
                "sp_queries": self.net.query_count,
                "cache_hits": self.net.cache.hits,
                "cache_misses": self.net.cache.misses,
                "graph_candidates": self.gcounters.candidates,
                "graph_bound_skipped": self.gcounters.bound_skipped,
                "graph_angle_pruned": self.gcounters.angle_pruned,
                "graph_probes": self.gcounters.probes,
                "graph_edges_added": self.gcounters.edges_added,
                "grid_n": self.grid_n,
                "speed_proxy_deg_per_ms": self.speed if math.isfinite(self.speed) else None,
            },
        )
        return result
