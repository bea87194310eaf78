"""Run outputs: metrics.csv, report.json, optional figures and a dispatch
trace, all under the configured output directory."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

from .config import SimConfig
from .model import load_requests, load_vehicles
from .roadnet import MS_PER_S, load_network
from .simulate import BatchRow, SimResult, Simulation
from .workload import generate_vehicles


def write_metrics_csv(path, rows: list[BatchRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["batch_idx", "t_start", "served", "expired",
                    "unified_cost", "wall_ms"])
        for r in rows:
            w.writerow([
                r.batch_idx,
                f"{r.t_start_ms / MS_PER_S:.3f}",
                r.served,
                r.expired,
                f"{r.unified_cost_s:.3f}",
                f"{r.wall_ms:.3f}",
            ])


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_report_json(path, cfg: SimConfig, result: SimResult) -> None:
    """Deterministic run summary: same config and inputs give identical bytes,
    so wall-clock figures stay out of this file."""
    doc = {
        "algorithm": cfg.algorithm,
        "config": cfg.raw,
        "inputs": {
            "nodes": _sha256(cfg.nodes),
            "edges": _sha256(cfg.edges),
            "requests": _sha256(cfg.requests),
            "vehicles": _sha256(cfg.vehicles) if cfg.vehicles else None,
        },
        "totals": {
            "requests": result.requests_total,
            "served": len(result.assigned),
            "expired": len(result.expired),
            "service_rate": result.service_rate,
            "driven_s": result.driven_ms / MS_PER_S,
            "unserved_trip_s": result.unserved_trip_ms / MS_PER_S,
            "unified_cost": result.unified_cost_s,
        },
        "counters": result.counters,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def render_figures(out_dir, rows: list[BatchRow]) -> list[Path]:
    """Per-batch service, objective, and latency charts as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir) / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    if not rows:
        return []
    xs = [r.batch_idx for r in rows]
    written = []

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar(xs, [r.served for r in rows], label="served", color="#2a7fba")
    ax.bar(xs, [-r.expired for r in rows], label="expired", color="#c0392b")
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_xlabel("batch")
    ax.set_ylabel("requests")
    ax.legend()
    ax.set_title("Service per batch")
    p = out_dir / "served_expired.png"
    fig.tight_layout()
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(xs, [r.unified_cost_s for r in rows], color="#2a7fba")
    ax.set_xlabel("batch")
    ax.set_ylabel("unified cost (s)")
    ax.set_title("Cumulative unified cost")
    p = out_dir / "unified_cost.png"
    fig.tight_layout()
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(xs, [r.wall_ms for r in rows], color="#7d3c98")
    ax.set_xlabel("batch")
    ax.set_ylabel("wall ms")
    ax.set_title("Batch wall time")
    p = out_dir / "batch_wall_ms.png"
    fig.tight_layout()
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)
    return written


def run_from_config(cfg: SimConfig, audit: bool = False) -> SimResult:
    """Load inputs, run the simulation, and write every configured output."""
    net = load_network(cfg.nodes, cfg.edges, cache_entries=cfg.cache_entries)
    requests = {r.id: r for r in load_requests(net, cfg.requests, cfg.gamma,
                                               cfg.max_wait_ms)}
    if cfg.vehicles is not None:
        vehicles = load_vehicles(net, cfg.vehicles)
    else:
        vehicles = generate_vehicles(net, cfg.fleet_size, cfg.capacity, cfg.seed)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    trace_fh = None
    trace_sink = None
    if cfg.trace:
        trace_fh = open(cfg.out_dir / "trace.jsonl", "w", encoding="utf-8")
        def trace_sink(obj, _fh=trace_fh):
            _fh.write(json.dumps(obj, sort_keys=True) + "\n")
    try:
        sim = Simulation(
            net, requests, vehicles,
            algorithm=cfg.algorithm,
            batch_ms=cfg.batch_ms,
            penalty=cfg.penalty,
            alpha=cfg.alpha,
            delta_rad=cfg.delta_rad,
            grid_n=cfg.grid_n,
            include_deadhead=cfg.cost_includes_deadhead,
            audit=audit,
            trace_sink=trace_sink,
        )
        result = sim.run()
    finally:
        if trace_fh is not None:
            trace_fh.close()

    write_metrics_csv(cfg.out_dir / "metrics.csv", result.rows)
    write_report_json(cfg.out_dir / "report.json", cfg, result)
    if cfg.figures:
        render_figures(cfg.out_dir, result.rows)
    return result
