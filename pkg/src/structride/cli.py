"""Command line front end: run a simulation, generate demand, or report
shareability-graph statistics and partition bounds."""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time

from .config import load_config
from .model import DEFAULT_MAX_WAIT_MS, load_requests
from .report import run_from_config
from .roadnet import MS_PER_S, load_network
from .shareability import (
    LogNormalFit,
    ShareabilityGraph,
    capped_partition_upper,
    clique_partition_upper,
    expected_sharing_probability,
    hill_eta,
    update_graph,
)
from .spatial import Projection, build_grid, speed_proxy
from .workload import generate_requests, load_workload_spec, write_requests_csv


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    t0 = time.perf_counter()
    result = run_from_config(cfg, audit=args.audit)
    wall = time.perf_counter() - t0
    print(f"algorithm      {cfg.algorithm}")
    print(f"requests       {result.requests_total}")
    print(f"served         {len(result.assigned)}")
    print(f"expired        {len(result.expired)}")
    print(f"service_rate   {result.service_rate:.4f}")
    print(f"driven_s       {result.driven_ms / MS_PER_S:.3f}")
    print(f"unified_cost   {result.unified_cost_s:.3f}")
    print(f"batches        {len(result.rows)}")
    print(f"wall_s         {wall:.3f}")
    print(f"outputs in     {cfg.out_dir}")
    return 0


def _cmd_gen(args) -> int:
    spec, nodes_path, edges_path = load_workload_spec(args.spec)
    net = load_network(nodes_path, edges_path)
    rows = generate_requests(net, spec)
    write_requests_csv(args.out, rows)
    print(f"wrote {len(rows)} requests to {args.out}")
    return 0


def _cmd_graph_stats(args) -> int:
    net = load_network(args.nodes, args.edges)
    requests = {r.id: r for r in load_requests(
        net, args.requests, args.gamma, int(round(args.max_wait_s * MS_PER_S)))}
    proj = Projection.for_network(net)
    speed = speed_proxy(net, proj)
    grid = build_grid(net, args.grid_n, proj)
    for rid, req in requests.items():
        grid.update(rid, req.s)
    graph = ShareabilityGraph()
    counters = update_graph(net, graph, requests, sorted(requests),
                            args.delta, grid, proj, speed)
    n = graph.num_nodes
    e = graph.num_edges
    degrees = [graph.degree(r) for r in graph.nodes()]
    eta = hill_eta(degrees)
    eta_used = eta if eta is not None else 2.0
    trips = [req.trip_cost / MS_PER_S for req in requests.values()]
    doc = {
        "requests": n,
        "edges": e,
        "degree_mean": statistics.fmean(degrees) if degrees else 0.0,
        "degree_max": max(degrees) if degrees else 0,
        "hill_eta": eta,
        "angle_pruned": counters.angle_pruned,
        "probes": counters.probes,
        "partition_upper": clique_partition_upper(n, e) if n else 0,
        "partition_upper_capped": (
            capped_partition_upper(n, e, eta_used, args.capacity) if n else 0),
    }
    if len(trips) >= 2 and min(trips) > 0:
        logs = [math.log(t) for t in trips]
        fit = LogNormalFit(statistics.fmean(logs),
                           max(statistics.stdev(logs), 1e-6), args.gamma)
        doc["expected_sharing_probability"] = expected_sharing_probability(
            fit, min(args.delta, math.pi))
        doc["trip_fit"] = {"mu": fit.mu, "sigma": fit.sigma}
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="structride",
                                description="batched ridesharing dispatch")
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="simulate one configured run")
    run.add_argument("--config", required=True, help="TOML run config")
    run.add_argument("--audit", action="store_true",
                     help="check dispatch invariants every batch")
    run.set_defaults(fn=_cmd_run)

    gen = sub.add_parser("gen", help="generate a seeded request workload")
    gen.add_argument("--spec", required=True, help="TOML workload spec")
    gen.add_argument("--out", required=True, help="output requests.csv")
    gen.set_defaults(fn=_cmd_gen)

    gs = sub.add_parser("graph-stats",
                        help="shareability graph statistics and bounds")
    gs.add_argument("--requests", required=True)
    gs.add_argument("--nodes", required=True)
    gs.add_argument("--edges", required=True)
    gs.add_argument("--gamma", type=float, default=1.5)
    gs.add_argument("--delta", type=float, default=math.pi)
    gs.add_argument("--grid-n", type=int, default=128)
    gs.add_argument("--capacity", type=int, default=4)
    gs.add_argument("--max-wait-s", type=float,
                    default=DEFAULT_MAX_WAIT_MS / MS_PER_S)
    gs.set_defaults(fn=_cmd_graph_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
