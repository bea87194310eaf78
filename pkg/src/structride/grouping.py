"""Level-wise construction of feasible request groups for one vehicle.

Level l merges pairs of level l-1 groups that differ in exactly one member;
a merge is kept only when every (l-1)-subset was itself feasible, the union
is a clique, and inserting the highest-degree member into the schedule of the
remaining group stays within all constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .insertion import insert_request
from .model import Schedule, Vehicle, peak_occupancy, schedule_cost
from .roadnet import RoadNetwork
from .shareability import ShareabilityGraph


@dataclass(frozen=True)
class GroupRecord:
    key: tuple           # sorted request ids
    schedule: Schedule   # full vehicle schedule including pre-existing stops
    delta_ms: int        # added driving over the vehicle's current plan
    cost_ms: int         # driving cost of the whole schedule from the probe position
    parent_key: tuple | None
    inserted: int | None


def build_groups(
    net: RoadNetwork,
    graph: ShareabilityGraph,
    pool,
    requests: dict,
    vehicle: Vehicle,
    now: int,
    include_deadhead: bool = True,
) -> dict[int, dict[tuple, GroupRecord]]:
    """All feasible groups for `vehicle` drawn from `pool`, keyed by size.

    Insertion order within a group is fixed (ascending degree, then id), so a
    group's schedule does not depend on which parent produced it.
    """
    pos_node, pos_time = vehicle.planning_position(now)
    base = vehicle.schedule
    base_occ = vehicle.occupancy()
    residual = vehicle.capacity - peak_occupancy(base, base_occ)
    levels: dict[int, dict[tuple, GroupRecord]] = {}
    if residual <= 0:
        return levels

    base_cost = schedule_cost(net, base, pos_node, include_deadhead=include_deadhead)
    if base_cost is None:
        return levels

    def full_cost(delta: int) -> int:
        return base_cost + delta

    singles: dict[tuple, GroupRecord] = {}
    for rid in sorted(set(pool)):
        req = requests[rid]
        if req.n > residual:
            continue
        ins = insert_request(
            net, base, pos_node, pos_time, vehicle.capacity, base_occ, req,
            include_deadhead=include_deadhead,
        )
        if ins is None:
            continue
        key = (rid,)
        singles[key] = GroupRecord(key, ins.schedule, ins.delta_ms,
                                   full_cost(ins.delta_ms), None, rid)
    if not singles:
        return levels
    levels[1] = singles

    level = 1
    while True:
        prev = levels[level]
        if len(prev) < 2:
            break
        prev_keys = sorted(prev)
        nxt: dict[tuple, GroupRecord] = {}
        seen: set[tuple] = set()
        for ka, kb in combinations(prev_keys, 2):
            union = tuple(sorted(set(ka) | set(kb)))
            if len(union) != level + 1 or union in seen:
                continue
            seen.add(union)
            if sum(requests[r].n for r in union) > residual:
                continue
            # every (l)-subset of the union must already be feasible
            if any(tuple(sorted(set(union) - {r})) not in prev for r in union):
                continue
            # parents differ in exactly one member each; the union is a clique
            # iff that one remaining pair is adjacent
            (only_a,) = set(ka) - set(kb)
            (only_b,) = set(kb) - set(ka)
            if not graph.has_edge(only_a, only_b):
                continue
            r_b = max(union, key=lambda r: (graph.degree(r), r))
            parent_key = tuple(sorted(set(union) - {r_b}))
            parent = prev[parent_key]
            ins = insert_request(
                net, parent.schedule, pos_node, pos_time, vehicle.capacity,
                base_occ, requests[r_b], include_deadhead=include_deadhead,
            )
            if ins is None:
                continue
            delta = parent.delta_ms + ins.delta_ms
            nxt[union] = GroupRecord(union, ins.schedule, delta,
                                     full_cost(delta), parent_key, r_b)
        if not nxt:
            break
        level += 1
        levels[level] = nxt
    return levels


def flatten_groups(levels: dict[int, dict[tuple, GroupRecord]]) -> dict[tuple, GroupRecord]:
    out: dict[tuple, GroupRecord] = {}
    for lv in sorted(levels):
        out.update(levels[lv])
    return out
