"""Domain types (request, vehicle, schedule) and the four schedule constraints
with deadline and buffer-time bookkeeping. All times are integer ms."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .roadnet import MS_PER_S, RoadNetwork

PICKUP = "pickup"
DROPOFF = "dropoff"

COVERAGE = "coverage"
ORDER = "order"
CAPACITY = "capacity"
DEADLINE = "deadline"

DEFAULT_MAX_WAIT_MS = 300_000


@dataclass(frozen=True)
class Request:
    id: int
    s: int
    e: int
    n: int          # riders
    t: int          # release
    d: int          # dropoff deadline
    w: int          # max wait before expiry
    trip_cost: int  # cost(s, e)

    @property
    def pickup_ddl(self) -> int:
        """Latest pickup instant that still allows a direct drive to meet d."""
        return self.d - self.trip_cost

    @property
    def expiry(self) -> int:
        return self.t + self.w


def make_request(
    net: RoadNetwork,
    rid: int,
    s: int,
    e: int,
    riders: int,
    t_ms: int,
    gamma: float,
    w_max_ms: int = DEFAULT_MAX_WAIT_MS,
) -> Request:
    """Request with deadline t + gamma * cost(s, e)."""
    if gamma <= 1:
        raise ValueError("gamma must be > 1")
    trip = _checked_trip(net, rid, s, e, riders)
    d_ms = t_ms + int(round(gamma * trip))
    w = min(w_max_ms, d_ms - trip - t_ms)
    return Request(rid, s, e, riders, t_ms, d_ms, w, trip)


def make_request_with_deadline(
    net: RoadNetwork,
    rid: int,
    s: int,
    e: int,
    riders: int,
    t_ms: int,
    d_ms: int,
    w_max_ms: int = DEFAULT_MAX_WAIT_MS,
) -> Request:
    """Request with an explicit absolute deadline (must leave nonnegative slack)."""
    trip = _checked_trip(net, rid, s, e, riders)
    if d_ms - t_ms < trip:
        raise ValueError(f"request {rid}: deadline {d_ms} unreachable (trip {trip}ms from t={t_ms})")
    w = min(w_max_ms, d_ms - trip - t_ms)
    return Request(rid, s, e, riders, t_ms, d_ms, w, trip)


def _checked_trip(net: RoadNetwork, rid: int, s: int, e: int, riders: int) -> int:
    if riders < 1:
        raise ValueError(f"request {rid}: riders must be >= 1")
    trip = net.cost(s, e)
    if trip is None:
        raise ValueError(f"request {rid}: destination {e} unreachable from {s}")
    return trip


@dataclass(frozen=True)
class WayPoint:
    node: int
    kind: str   # PICKUP or DROPOFF
    rid: int
    riders: int
    ddl: int    # absolute ms


Schedule = tuple  # tuple[WayPoint, ...]


def pickup_point(req: Request) -> WayPoint:
    return WayPoint(req.s, PICKUP, req.id, req.n, req.pickup_ddl)


def dropoff_point(req: Request) -> WayPoint:
    return WayPoint(req.e, DROPOFF, req.id, req.n, req.d)


@dataclass
class Vehicle:
    id: int
    capacity: int
    node: int
    time: int = 0     # instant the vehicle is/was available at `node`
    schedule: Schedule = ()
    onboard: dict = field(default_factory=dict)   # rid -> riders in the car
    assigned: set = field(default_factory=set)    # rids committed, not yet dropped
    driven_ms: int = 0

    def planning_position(self, now: int) -> tuple[int, int]:
        return self.node, max(self.time, now)

    def occupancy(self) -> int:
        return sum(self.onboard.values())

    def begin_replan(self, net: RoadNetwork, now: int) -> None:
        """Align the clock with the replanning instant before the schedule is
        replaced.

        A vehicle mid-plan is snapped back to its departing node and the
        elapsed time counts as driven, so plan timing and accounting agree; an
        idle vehicle just waited in place.
        """
        if now > self.time:
            if self.schedule:
                self.driven_ms += now - self.time
            self.time = now

    def advance_to(self, net: RoadNetwork, now: int) -> list:
        """Execute way-points reached by `now`; returns (time, WayPoint) events."""
        events = []
        t, node = self.time, self.node
        k = 0
        for wp in self.schedule:
            leg = net.cost(node, wp.node)
            if leg is None:
                raise RuntimeError(f"vehicle {self.id}: committed leg {node}->{wp.node} unreachable")
            if t + leg > now:
                break
            t += leg
            self.driven_ms += leg
            node = wp.node
            if wp.kind == PICKUP:
                self.onboard[wp.rid] = wp.riders
            else:
                self.onboard.pop(wp.rid, None)
                self.assigned.discard(wp.rid)
            events.append((t, wp))
            k += 1
        if k:
            self.schedule = self.schedule[k:]
            self.node, self.time = node, t
        return events


@dataclass
class ScheduleTimes:
    arrive: list    # arrival ms per way-point (truncated at an unreachable leg)
    buf: list       # buffer ms per way-point, empty when not reachable
    reachable: bool
    feasible: bool  # reachable and arrive <= ddl at every point


def recompute_times(net: RoadNetwork, schedule: Schedule, pos_node: int, pos_time: int) -> ScheduleTimes:
    """Forward arrival times from the position, then buffers right-to-left:
    buf(last) = ddl - arrive; buf(x) = min(buf(x+1), ddl(x+1) - arrive(x+1))."""
    arrive = []
    t, node = pos_time, pos_node
    for wp in schedule:
        leg = net.cost(node, wp.node)
        if leg is None:
            return ScheduleTimes(arrive, [], False, False)
        t += leg
        arrive.append(t)
        node = wp.node
    buf = [0] * len(schedule)
    feasible = True
    for i in range(len(schedule) - 1, -1, -1):
        slack = schedule[i].ddl - arrive[i]
        if slack < 0:
            feasible = False
        if i == len(schedule) - 1:
            buf[i] = slack
        else:
            buf[i] = min(buf[i + 1], schedule[i + 1].ddl - arrive[i + 1])
    return ScheduleTimes(arrive, buf, True, feasible)


def check_feasible(net: RoadNetwork, schedule: Schedule, vehicle: Vehicle) -> str | None:
    """First violated constraint among coverage, order, capacity, deadline;
    None when the schedule is fully feasible from the vehicle's position."""
    pickups: dict[int, int] = {}
    dropoffs: dict[int, int] = {}
    for i, wp in enumerate(schedule):
        store = pickups if wp.kind == PICKUP else dropoffs
        if wp.rid in store:
            return COVERAGE
        store[wp.rid] = i
    for rid in pickups:
        if rid not in dropoffs:
            return COVERAGE
        if rid in vehicle.onboard:
            return COVERAGE  # onboard rider must not be picked up again
    for rid in dropoffs:
        if rid not in pickups and rid not in vehicle.onboard:
            return COVERAGE
    for rid in vehicle.assigned | set(vehicle.onboard):
        if rid not in dropoffs:
            return COVERAGE
    for rid, i in pickups.items():
        if dropoffs[rid] < i:
            return ORDER
    occ = vehicle.occupancy()
    for wp in schedule:
        occ += wp.riders if wp.kind == PICKUP else -wp.riders
        if occ > vehicle.capacity:
            return CAPACITY
        if occ < 0:
            return ORDER
    times = recompute_times(net, schedule, vehicle.node, vehicle.time)
    if not times.feasible:
        return DEADLINE  # unreachable legs can never meet a deadline either
    return None


def schedule_cost(net: RoadNetwork, schedule: Schedule, pos_node: int, include_deadhead: bool = True) -> int | None:
    """Sum of leg costs in ms; with include_deadhead, the approach leg from the
    vehicle's position to the first way-point counts too. None if a leg is
    unreachable."""
    if not schedule:
        return 0
    total = 0
    node = pos_node if include_deadhead else schedule[0].node
    for wp in schedule:
        leg = net.cost(node, wp.node)
        if leg is None:
            return None
        total += leg
        node = wp.node
    return total


def peak_occupancy(schedule: Schedule, base: int) -> int:
    occ = peak = base
    for wp in schedule:
        occ += wp.riders if wp.kind == PICKUP else -wp.riders
        peak = max(peak, occ)
    return peak


def load_requests(
    net: RoadNetwork,
    path: str,
    gamma: float,
    w_max_ms: int = DEFAULT_MAX_WAIT_MS,
) -> list:
    """requests.csv: id,src_node,dst_node,riders,release_s. Deadlines derive
    from gamma at load; rows with unreachable trips are load errors."""
    out = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["id", "src_node", "dst_node", "riders", "release_s"]
        if header is None or [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: bad header {header}, expected {expected}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                rid, s, e, riders = int(row[0]), int(row[1]), int(row[2]), int(row[3])
                release = float(row[4])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed request row {row}")
            if rid in seen:
                raise ValueError(f"{path}:{lineno}: duplicate request id {rid}")
            seen.add(rid)
            if not (net.has_node(s) and net.has_node(e)):
                raise ValueError(f"{path}:{lineno}: unknown node in request {rid}")
            try:
                req = make_request(net, rid, s, e, riders, int(round(release * MS_PER_S)), gamma, w_max_ms)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}")
            out.append(req)
    out.sort(key=lambda r: (r.t, r.id))
    return out


def load_vehicles(net: RoadNetwork, path: str) -> list:
    """vehicles.csv: id,start_node,capacity."""
    out = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["id", "start_node", "capacity"]
        if header is None or [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: bad header {header}, expected {expected}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                vid, node, cap = int(row[0]), int(row[1]), int(row[2])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: malformed vehicle row {row}")
            if vid in seen:
                raise ValueError(f"{path}:{lineno}: duplicate vehicle id {vid}")
            seen.add(vid)
            if not net.has_node(node):
                raise ValueError(f"{path}:{lineno}: unknown start node {node}")
            if cap < 1:
                raise ValueError(f"{path}:{lineno}: capacity must be >= 1")
            out.append(Vehicle(vid, cap, node))
    out.sort(key=lambda v: v.id)
    return out
