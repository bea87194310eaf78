import math
import statistics

import pytest

from conftest import S
from structride.roadnet import RoadNetwork, load_network
from structride.workload import (
    Hotspot,
    RawRequest,
    WorkloadSpec,
    generate_requests,
    generate_vehicles,
    load_workload_spec,
    make_lattice,
    write_network_csv,
    write_requests_csv,
)


def _city(seed=0):
    coords, edges = make_lattice(12, 12, lo_s=20, hi_s=60, seed=seed)
    return RoadNetwork(coords, edges)


def _spec(**kw):
    base = dict(count=60, rate_per_s=0.5, trip_mu=math.log(300.0),
                trip_sigma=0.4, seed=7)
    base.update(kw)
    return WorkloadSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        _spec(count=-1)
    with pytest.raises(ValueError):
        _spec(rate_per_s=0.0)
    with pytest.raises(ValueError):
        _spec(trip_sigma=0.0)
    with pytest.raises(ValueError):
        _spec(hotspot_frac=1.5)
    with pytest.raises(ValueError):
        _spec(hotspot_frac=0.3)  # no hotspots given
    with pytest.raises(ValueError):
        _spec(max_riders=0)


def test_generation_is_deterministic():
    net = _city()
    a = generate_requests(net, _spec())
    b = generate_requests(net, _spec())
    assert a == b
    c = generate_requests(net, _spec(seed=8))
    assert a != c


def test_generation_count_ids_and_releases():
    net = _city()
    rows = generate_requests(net, _spec(count=40))
    assert len(rows) == 40
    assert [r.id for r in rows] == list(range(40))
    assert all(rows[i].release_s < rows[i + 1].release_s for i in range(39))
    assert all(r.src_node != r.dst_node for r in rows)
    assert all(r.riders == 1 for r in rows)


def test_arrival_rate_roughly_matches():
    net = _city()
    rows = generate_requests(net, _spec(count=400, rate_per_s=2.0))
    span = rows[-1].release_s
    rate = len(rows) / span
    assert 1.6 < rate < 2.4


def test_trip_lengths_track_lognormal_target():
    net = _city(seed=3)
    mu = math.log(300.0)
    rows = generate_requests(net, _spec(count=300, trip_mu=mu, trip_sigma=0.3))
    logs = []
    for r in rows:
        cost = net.cost(r.src_node, r.dst_node)
        assert cost is not None
        logs.append(math.log(cost / S))
    # matching tolerance is +-20% per trip, so the log-mean lands close
    assert abs(statistics.fmean(logs) - mu) < 0.1


def test_rider_counts_span_range():
    net = _city()
    rows = generate_requests(net, _spec(count=200, max_riders=3))
    seen = {r.riders for r in rows}
    assert seen == {1, 2, 3}


def test_hotspot_sources_cluster():
    net = _city()
    hs = Hotspot(center_node=0, spread_s=90.0)
    near = sorted(net.costs_from(0, cutoff_ms=90 * S))
    rows = generate_requests(
        net, _spec(count=150, hotspot_frac=0.8, hotspots=[hs]))
    frac_near = sum(r.src_node in near for r in rows) / len(rows)
    baseline = len(near) / len(net.nodes())
    assert frac_near > max(0.6, 2 * baseline)


def test_impossible_trip_length_raises():
    net = _city()
    # a ~28h trip cannot exist on a 12x12 lattice of <=60s edges
    spec = _spec(count=3, trip_mu=math.log(100000.0), trip_sigma=0.05)
    with pytest.raises(ValueError, match="too small"):
        generate_requests(net, spec)


def test_generate_vehicles_seeded():
    net = _city()
    a = generate_vehicles(net, 20, 4, seed=1)
    b = generate_vehicles(net, 20, 4, seed=1)
    assert [(v.id, v.node) for v in a] == [(v.id, v.node) for v in b]
    assert [v.id for v in a] == list(range(20))
    assert all(v.capacity == 4 for v in a)
    assert all(v.node in net.nodes() for v in a)
    c = generate_vehicles(net, 20, 4, seed=2)
    assert [v.node for v in a] != [v.node for v in c]


def test_make_lattice_shape():
    coords, edges = make_lattice(3, 2, lo_s=10, hi_s=10, seed=0)
    assert len(coords) == 6
    # 2 horizontal runs of 2 plus 3 vertical runs of 1, both directions
    assert len(edges) == (2 * 2 + 3 * 1) * 2
    assert all(w == 10 * S for _, _, w in edges)
    net = RoadNetwork(coords, edges)
    assert net.cost(0, 5) == 30 * S


def test_network_csv_roundtrip(tmp_path):
    coords, edges = make_lattice(4, 3, seed=5)
    nodes_p, edges_p = tmp_path / "nodes.csv", tmp_path / "edges.csv"
    write_network_csv(nodes_p, edges_p, coords, edges)
    net = load_network(nodes_p, edges_p)
    direct = RoadNetwork(coords, edges)
    assert sorted(net.nodes()) == sorted(direct.nodes())
    for a in (0, 5, 11):
        for b in (0, 5, 11):
            assert net.cost(a, b) == direct.cost(a, b)


def test_requests_csv_written(tmp_path):
    rows = [RawRequest(0, 1, 2, 1, 0.25), RawRequest(1, 3, 4, 2, 1.5)]
    p = tmp_path / "requests.csv"
    write_requests_csv(p, rows)
    text = p.read_text().splitlines()
    assert text[0] == "id,src_node,dst_node,riders,release_s"
    assert text[1] == "0,1,2,1,0.250"
    assert text[2] == "1,3,4,2,1.500"


def test_load_workload_spec(tmp_path):
    (tmp_path / "wl.toml").write_text(
        '[network]\nnodes = "n.csv"\nedges = "e.csv"\n'
        '[workload]\ncount = 10\nrate_per_s = 0.5\n'
        'trip_mu = 5.7\ntrip_sigma = 0.4\nseed = 3\n'
        'hotspot_frac = 0.5\nmax_riders = 2\n'
        'hotspots = [{center_node = 4, spread_s = 60.0, weight = 2.0}]\n')
    spec, nodes_p, edges_p = load_workload_spec(tmp_path / "wl.toml")
    assert spec.count == 10 and spec.seed == 3
    assert spec.hotspots == [Hotspot(4, 60.0, 2.0)]
    assert nodes_p == tmp_path / "n.csv"
    assert edges_p == tmp_path / "e.csv"


def test_load_workload_spec_missing_keys(tmp_path):
    (tmp_path / "bad.toml").write_text(
        '[network]\nnodes = "n.csv"\n'
        '[workload]\ncount = 10\nrate_per_s = 0.5\n'
        'trip_mu = 5.7\ntrip_sigma = 0.4\n')
    with pytest.raises(ValueError, match="edges"):
        load_workload_spec(tmp_path / "bad.toml")
    (tmp_path / "bad2.toml").write_text(
        '[network]\nnodes = "n.csv"\nedges = "e.csv"\n'
        '[workload]\ncount = 10\n')
    with pytest.raises(ValueError, match="rate_per_s"):
        load_workload_spec(tmp_path / "bad2.toml")
