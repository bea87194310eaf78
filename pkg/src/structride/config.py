"""TOML-backed run configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .model import DEFAULT_MAX_WAIT_MS
from .roadnet import MS_PER_S

ALGORITHMS = ("sard", "prunegdp")


@dataclass
class SimConfig:
    nodes: Path
    edges: Path
    requests: Path
    out_dir: Path
    vehicles: Path | None = None
    algorithm: str = "sard"
    gamma: float = 1.5
    penalty: float = 10.0
    alpha: float = 1.0
    batch_ms: int = 5_000
    delta_rad: float = math.pi
    max_wait_ms: int = DEFAULT_MAX_WAIT_MS
    grid_n: int = 128
    seed: int = 0
    capacity: int = 4
    fleet_size: int = 50
    cost_includes_deadhead: bool = True
    cache_entries: int = 1_000_000
    figures: bool = True
    trace: bool = False
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.gamma <= 1:
            raise ValueError("gamma must be > 1")
        if self.batch_ms <= 0:
            raise ValueError("batch_s must be > 0")
        if not 0 <= self.delta_rad <= 2 * math.pi:
            raise ValueError("delta must be in [0, 2*pi]")
        if self.capacity < 1 or self.fleet_size < 1:
            raise ValueError("capacity and fleet_size must be >= 1")
        if self.grid_n < 1:
            raise ValueError("grid_n must be >= 1")

    @property
    def prune_angles(self) -> bool:
        """delta at the full circle turns the angle rule off."""
        return self.delta_rad < 2 * math.pi - 1e-12


def _path(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_config(path) -> SimConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    base = path.parent
    net = doc.get("network", {})
    sim = doc.get("sim", {})
    io = doc.get("io", {})
    for section, known in (
        ("network", {"nodes", "edges"}),
        ("sim", {"requests", "vehicles", "algorithm", "gamma", "penalty",
                 "alpha", "batch_s", "delta", "max_wait_s", "grid_n", "seed",
                 "capacity", "fleet_size", "cost_includes_deadhead",
                 "cache_entries"}),
        ("io", {"out_dir", "figures", "trace"}),
    ):
        extra = set(doc.get(section, {})) - known
        if extra:
            raise ValueError(f"unknown keys in [{section}]: {sorted(extra)}")
    for key in ("nodes", "edges"):
        if key not in net:
            raise ValueError(f"[network] must set {key}")
    if "requests" not in sim:
        raise ValueError("[sim] must set requests")
    cfg = SimConfig(
        nodes=_path(base, net["nodes"]),
        edges=_path(base, net["edges"]),
        requests=_path(base, sim["requests"]),
        vehicles=_path(base, sim["vehicles"]) if "vehicles" in sim else None,
        out_dir=_path(base, io.get("out_dir", "out")),
        algorithm=sim.get("algorithm", "sard"),
        gamma=float(sim.get("gamma", 1.5)),
        penalty=float(sim.get("penalty", 10.0)),
        alpha=float(sim.get("alpha", 1.0)),
        batch_ms=int(round(float(sim.get("batch_s", 5.0)) * MS_PER_S)),
        delta_rad=float(sim.get("delta", math.pi)),
        max_wait_ms=int(round(float(sim.get("max_wait_s", DEFAULT_MAX_WAIT_MS / MS_PER_S)) * MS_PER_S)),
        grid_n=int(sim.get("grid_n", 128)),
        seed=int(sim.get("seed", 0)),
        capacity=int(sim.get("capacity", 4)),
        fleet_size=int(sim.get("fleet_size", 50)),
        cost_includes_deadhead=bool(sim.get("cost_includes_deadhead", True)),
        cache_entries=int(sim.get("cache_entries", 1_000_000)),
        figures=bool(io.get("figures", True)),
        trace=bool(io.get("trace", False)),
        raw=doc,
    )
    return cfg
