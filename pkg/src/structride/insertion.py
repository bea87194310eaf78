"""Linear insertion of a request into a schedule without reordering, group
schedule construction in shareability order, and an exhaustive oracle."""

from __future__ import annotations

from dataclasses import dataclass

from .model import PICKUP, Request, Schedule, dropoff_point, pickup_point
from .roadnet import RoadNetwork

_INF = 1 << 62


@dataclass
class Insertion:
    schedule: Schedule
    delta_ms: int     # cost increase under the configured metric
    pickup_slot: int
    dropoff_slot: int


def insert_request(
    net: RoadNetwork,
    schedule: Schedule,
    pos_node: int,
    pos_time: int,
    capacity: int,
    base_occupancy: int,
    req: Request,
    include_deadhead: bool = True,
    min_pickup_slot: int = 0,
) -> Insertion | None:
    """Cheapest feasible placement of req's pickup/dropoff into the schedule.

    Existing way-points keep their relative order. All O(k^2) slot pairs are
    scanned with buffer-time and occupancy early exits; ties go to the first
    placement in scan order (pickup slot, then dropoff slot, ascending).
    Returns None when no placement meets every constraint, or when the base
    schedule itself is unreachable/late from the given position.
    """
    k = len(schedule)
    nodes = [wp.node for wp in schedule]

    arrive = []
    t, node = pos_time, pos_node
    for wp in schedule:
        leg = net.cost(node, wp.node)
        if leg is None:
            return None
        t += leg
        arrive.append(t)
        node = wp.node
    slack = [schedule[i].ddl - arrive[i] for i in range(k)]
    if any(s < 0 for s in slack):
        return None
    # min slack over [i, k); index k = no trailing way-points to disturb
    sufmin = [_INF] * (k + 1)
    for i in range(k - 1, -1, -1):
        sufmin[i] = min(slack[i], sufmin[i + 1])
    occ_after = [0] * k
    occ = base_occupancy
    for i, wp in enumerate(schedule):
        occ += wp.riders if wp.kind == PICKUP else -wp.riders
        occ_after[i] = occ
        if occ > capacity:
            return None

    n = req.n
    pickup_ddl = req.pickup_ddl
    best: tuple[int, int, int] | None = None  # (delta, i, j)

    for i in range(min_pickup_slot, k + 1):
        if i > 0:
            prev_node, prev_t = nodes[i - 1], arrive[i - 1]
            occ_at_pickup = occ_after[i - 1]
        else:
            prev_node, prev_t = pos_node, pos_time
            occ_at_pickup = base_occupancy
        if occ_at_pickup + n > capacity:
            continue
        leg_to_s = net.cost(prev_node, req.s)
        if leg_to_s is None:
            continue
        a_p = prev_t + leg_to_s
        if a_p > pickup_ddl:
            continue

        # metric correction when the approach leg is excluded and the new
        # pickup becomes the first way-point
        if include_deadhead or i > 0:
            adjust = 0
        else:
            adjust = -leg_to_s + (arrive[0] - pos_time if k > 0 else 0)

        # dropoff immediately after the pickup
        a_e = a_p + req.trip_cost
        if a_e <= req.d:
            if i < k:
                leg_e_next = net.cost(req.e, nodes[i])
                if leg_e_next is not None:
                    old_leg = arrive[i] - prev_t
                    dtot = leg_to_s + req.trip_cost + leg_e_next - old_leg
                    if dtot <= sufmin[i]:
                        delta = dtot + adjust
                        if best is None or delta < best[0]:
                            best = (delta, i, i)
            else:
                delta = leg_to_s + req.trip_cost + adjust
                if best is None or delta < best[0]:
                    best = (delta, i, i)

        # dropoff after one or more existing way-points
        if i == k:
            continue
        leg_s_next = net.cost(req.s, nodes[i])
        if leg_s_next is None:
            continue
        d1 = leg_to_s + leg_s_next - (arrive[i] - prev_t)
        runmin = _INF
        for j in range(i + 1, k + 1):
            x = j - 1
            runmin = min(runmin, slack[x])
            if d1 > runmin:
                break
            if occ_after[x] + n > capacity:
                break
            leg_to_e = net.cost(nodes[x], req.e)
            if leg_to_e is None:
                continue
            a_e = arrive[x] + d1 + leg_to_e
            if a_e > req.d:
                continue
            if j < k:
                leg_e_next = net.cost(req.e, nodes[j])
                if leg_e_next is None:
                    continue
                d2 = d1 + leg_to_e + leg_e_next - (arrive[j] - arrive[x])
                if d2 > sufmin[j]:
                    continue
                delta = d2 + adjust
            else:
                delta = d1 + leg_to_e + adjust
            if best is None or delta < best[0]:
                best = (delta, i, j)

    if best is None:
        return None
    delta, i, j = best
    new_schedule = schedule[:i] + (pickup_point(req),) + schedule[i:j] + (dropoff_point(req),) + schedule[j:]
    return Insertion(new_schedule, delta, i, j)


def build_group_schedule(
    net: RoadNetwork,
    requests: list,
    degrees: dict,
    pos_node: int,
    pos_time: int,
    capacity: int,
    base_occupancy: int = 0,
    base_schedule: Schedule = (),
    include_deadhead: bool = True,
) -> tuple[Schedule, int] | None:
    """Fold the requests into the base schedule in ascending (degree, id)
    order via insert_request. On an idle vehicle the second insertion scans
    all six interleavings, so two-request results are exact optima."""
    order = sorted(requests, key=lambda r: (degrees.get(r.id, 0), r.id))
    sched = base_schedule
    total = 0
    for req in order:
        ins = insert_request(
            net, sched, pos_node, pos_time, capacity, base_occupancy, req,
            include_deadhead=include_deadhead,
        )
        if ins is None:
            return None
        sched = ins.schedule
        total += ins.delta_ms
    return sched, total


def optimal_schedule_oracle(
    net: RoadNetwork,
    requests: list,
    pos_node: int,
    pos_time: int,
    capacity: int,
    base_occupancy: int = 0,
    include_deadhead: bool = True,
) -> tuple[Schedule, int] | None:
    """Global minimum-cost feasible schedule by exhaustive enumeration of all
    way-point orders with pickup-before-dropoff. Test oracle; |requests| <= 5."""
    if len(requests) > 5:
        raise ValueError("oracle is capped at 5 requests")
    reqs = sorted(requests, key=lambda r: r.id)
    points = []
    for r in reqs:
        points.append(pickup_point(r))
        points.append(dropoff_point(r))
    m = len(points)
    best_cost = _INF
    best_seq: list | None = None

    def dfs(node, t, occ, picked, done, seq, metric):
        nonlocal best_cost, best_seq
        if metric >= best_cost:
            return
        if len(seq) == m:
            best_cost = metric
            best_seq = list(seq)
            return
        for idx, wp in enumerate(points):
            if idx in done:
                continue
            if wp.kind == PICKUP:
                if occ + wp.riders > capacity:
                    continue
            elif idx - 1 not in picked:
                continue  # dropoff slots are odd; pickup is the previous point
            leg = net.cost(node, wp.node)
            if leg is None:
                continue
            at = t + leg
            if at > wp.ddl:
                continue
            counted = leg if (seq or include_deadhead) else 0
            if wp.kind == PICKUP:
                picked.add(idx)
                seq.append(idx)
                done.add(idx)
                dfs(wp.node, at, occ + wp.riders, picked, done, seq, metric + counted)
                done.discard(idx)
                seq.pop()
                picked.discard(idx)
            else:
                seq.append(idx)
                done.add(idx)
                dfs(wp.node, at, occ - wp.riders, picked, done, seq, metric + counted)
                done.discard(idx)
                seq.pop()

    dfs(pos_node, pos_time, base_occupancy, set(), set(), [], 0)
    if best_seq is None:
        return None
    return tuple(points[i] for i in best_seq), best_cost
