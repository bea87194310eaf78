"""Batched ridesharing dispatch: shareability graph construction, group
formation, proposal/acceptance assignment, and a greedy baseline."""

from .config import SimConfig, load_config
from .dispatch import (
    BatchOutcome,
    candidate_queues,
    prunegdp_batch,
    sard_batch,
    unified_cost_ms,
)
from .grouping import GroupRecord, build_groups, flatten_groups
from .insertion import Insertion, build_group_schedule, insert_request, optimal_schedule_oracle
from .model import (
    DEFAULT_MAX_WAIT_MS,
    Request,
    Vehicle,
    WayPoint,
    check_feasible,
    load_requests,
    load_vehicles,
    make_request,
    make_request_with_deadline,
    recompute_times,
    schedule_cost,
)
from .roadnet import MS_PER_S, RoadNetwork, load_network
from .shareability import (
    GraphCounters,
    LogNormalFit,
    ShareabilityGraph,
    angle_pruned,
    capped_partition_upper,
    clique_partition_upper,
    expected_sharing_probability,
    hill_eta,
    is_shareable,
    shareability_loss,
    substitute_supernode,
    update_graph,
)
from .simulate import AuditError, BatchRow, SimResult, Simulation
from .spatial import GridIndex, Projection, build_grid, speed_proxy
from .workload import (
    Hotspot,
    WorkloadSpec,
    generate_requests,
    generate_vehicles,
    load_workload_spec,
    make_lattice,
    write_network_csv,
    write_requests_csv,
)

__version__ = "0.1.0"
