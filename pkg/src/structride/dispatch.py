"""Batch assignment: proposal/acceptance dispatch over the shareability
graph, and a greedy insertion baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .grouping import GroupRecord, build_groups, flatten_groups
from .insertion import insert_request
from .model import Vehicle
from .roadnet import RoadNetwork
from .shareability import ShareabilityGraph
from .spatial import GridIndex


@dataclass
class BatchOutcome:
    assigned: dict[int, int] = field(default_factory=dict)   # rid -> vid
    groups: list[tuple[int, tuple]] = field(default_factory=list)  # (vid, ids)
    rounds: int = 0
    proposals: int = 0


def candidate_queues(
    net: RoadNetwork,
    requests: dict,
    pool,
    vehicles: dict[int, Vehicle],
    now: int,
    vgrid: GridIndex | None = None,
    speed: float = math.inf,
    include_deadhead: bool = True,
) -> dict[int, list[int]]:
    """Per-request vehicle queues, costliest insertion first.

    A vehicle qualifies when the request currently inserts into its plan; the
    search radius (waiting budget plus full detour budget) bounds how far a
    useful vehicle can sit.
    """
    queues: dict[int, list[int]] = {}
    for rid in sorted(set(pool)):
        req = requests[rid]
        radius_ms = req.w + (req.d - req.t)
        if vgrid is not None:
            cand = vgrid.range_query(req.s, radius_ms, speed)
        else:
            cand = vehicles.keys()
        scored = []
        for vid in sorted(cand):
            veh = vehicles[vid]
            pos_node, pos_time = veh.planning_position(now)
            ins = insert_request(
                net, veh.schedule, pos_node, pos_time, veh.capacity,
                veh.occupancy(), req, include_deadhead=include_deadhead,
            )
            if ins is not None:
                scored.append((-ins.delta_ms, vid))
        scored.sort()
        if scored:
            queues[rid] = [vid for _, vid in scored]
    return queues


def _group_quality(rec: GroupRecord, graph: ShareabilityGraph, requests: dict, loss: int):
    key = rec.key
    multi = len(key) > 1
    atomic_pair = len(key) == 2 and any(graph.degree(r) == 1 for r in key)
    served_ms = sum(requests[r].trip_cost for r in key)
    ratio = Fraction(served_ms, max(rec.cost_ms, 1))
    return (0 if multi else 1, loss, 0 if atomic_pair else 1, -ratio, -len(key), key)


def select_group(
    levels: dict[int, dict[tuple, GroupRecord]],
    graph: ShareabilityGraph,
    requests: dict,
) -> tuple[GroupRecord, int] | None:
    """Pick the group a vehicle should accept: shared groups before
    singletons, then least shareability loss, then pairs holding a degree-1
    request, then best served-per-driven ratio."""
    from .shareability import shareability_loss

    best = None
    best_rec = None
    best_loss = 0
    for lv in sorted(levels):
        for key in sorted(levels[lv]):
            rec = levels[lv][key]
            loss = shareability_loss(graph, key)
            q = _group_quality(rec, graph, requests, loss)
            if best is None or q < best:
                best, best_rec, best_loss = q, rec, loss
    if best_rec is None:
        return None
    return best_rec, best_loss


def sard_batch(
    net: RoadNetwork,
    graph: ShareabilityGraph,
    requests: dict,
    pool,
    vehicles: dict[int, Vehicle],
    now: int,
    vgrid: GridIndex | None = None,
    speed: float = math.inf,
    include_deadhead: bool = True,
    trace_sink=None,
) -> BatchOutcome:
    """One dispatch batch: requests walk their vehicle queues; each proposed-to
    vehicle regroups over the proposals plus its tentative members and keeps
    the best group, bumping anyone left out. Accepted groups stay tentative
    until the batch settles, so a later round can still displace them.
    """
    out = BatchOutcome()
    queues = candidate_queues(net, requests, pool, vehicles, now, vgrid, speed,
                              include_deadhead)
    qpos = {rid: 0 for rid in queues}
    active = set(queues)
    tentative: dict[int, GroupRecord] = {}

    def reactivate(rid: int) -> None:
        if qpos[rid] < len(queues[rid]):
            active.add(rid)

    while active:
        out.rounds += 1
        proposals: dict[int, set[int]] = {}
        for rid in sorted(active):
            vid = queues[rid][qpos[rid]]
            qpos[rid] += 1
            proposals.setdefault(vid, set()).add(rid)
            out.proposals += 1
        active.clear()
        for vid in sorted(proposals):
            veh = vehicles[vid]
            current = set(tentative[vid].key) if vid in tentative else set()
            pool_v = proposals[vid] | current
            levels = build_groups(net, graph, pool_v, requests, veh, now,
                                  include_deadhead)
            picked = select_group(levels, graph, requests)
            if picked is None:
                for rid in sorted(proposals[vid]):
                    reactivate(rid)
                continue
            rec, loss = picked
            accepted = set(rec.key)
            for rid in sorted((current | proposals[vid]) - accepted):
                reactivate(rid)
            tentative[vid] = rec
            if trace_sink is not None:
                trace_sink({
                    "round": out.rounds,
                    "vehicle": vid,
                    "pool": sorted(pool_v),
                    "groups": [
                        {"ids": list(k), "delta_ms": levels[lv][k].delta_ms}
                        for lv in sorted(levels) for k in sorted(levels[lv])
                    ],
                    "chosen": list(rec.key),
                    "loss": loss,
                })

    for vid in sorted(tentative):
        rec = tentative[vid]
        veh = vehicles[vid]
        veh.begin_replan(net, now)
        veh.schedule = rec.schedule
        veh.assigned |= set(rec.key)
        for rid in rec.key:
            out.assigned[rid] = vid
        out.groups.append((vid, rec.key))
    return out


def prunegdp_batch(
    net: RoadNetwork,
    requests: dict,
    pool,
    vehicles: dict[int, Vehicle],
    now: int,
    vgrid: GridIndex | None = None,
    speed: float = math.inf,
    include_deadhead: bool = True,
) -> BatchOutcome:
    """Greedy baseline: requests in release order each take the cheapest
    feasible insertion right away; unplaced requests wait for the next batch.
    """
    out = BatchOutcome()
    order = sorted(pool, key=lambda rid: (requests[rid].t, rid))
    for rid in order:
        req = requests[rid]
        radius_ms = req.w + (req.d - req.t)
        if vgrid is not None:
            cand = vgrid.range_query(req.s, radius_ms, speed)
        else:
            cand = vehicles.keys()
        best = None
        best_vid = None
        for vid in sorted(cand):
            veh = vehicles[vid]
            pos_node, pos_time = veh.planning_position(now)
            ins = insert_request(
                net, veh.schedule, pos_node, pos_time, veh.capacity,
                veh.occupancy(), req, include_deadhead=include_deadhead,
            )
            if ins is None:
                continue
            if best is None or (ins.delta_ms, vid) < (best.delta_ms, best_vid):
                best, best_vid = ins, vid
        if best is None:
            continue
        veh = vehicles[best_vid]
        veh.begin_replan(net, now)
        veh.schedule = best.schedule
        veh.assigned.add(rid)
        out.assigned[rid] = best_vid
        out.groups.append((best_vid, (rid,)))
    out.rounds = 1
    out.proposals = len(out.assigned)
    return out


def unified_cost_ms(alpha: float, penalty: float, driven_ms: int, unserved_trip_ms: int) -> float:
    """Total objective: weighted driven time plus penalty-scaled trip time of
    every request that expired unserved."""
    return alpha * driven_ms + penalty * unserved_trip_ms
