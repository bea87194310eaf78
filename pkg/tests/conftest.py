import random

import pytest

from structride import RoadNetwork, Vehicle, make_request_with_deadline
from structride.roadnet import MS_PER_S

S = MS_PER_S


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long statistical acceptance runs")


LINE4_COORDS = {0: (0.0, 0.0), 1: (1.0, 0.0), 2: (2.0, 0.0), 3: (3.0, 0.0)}
LINE4_EDGES = [
    (0, 1, 10 * S), (1, 0, 10 * S),
    (1, 2, 10 * S), (2, 1, 10 * S),
    (2, 3, 10 * S), (3, 2, 10 * S),
]


@pytest.fixture(scope="session")
def line4():
    return RoadNetwork(LINE4_COORDS, LINE4_EDGES)


# Seven-node network with two idle vehicles and four time-staggered requests;
# asymmetric one-way pairs make route direction matter.
EX1_COORDS = {
    0: (0.0, 0.0),   # a
    1: (2.0, 1.0),   # b
    2: (2.0, -1.0),  # c
    3: (8.0, 0.0),   # d
    4: (6.0, 1.0),   # e
    5: (6.0, -1.0),  # f
    6: (9.0, -2.0),  # g
}

def _ex1_edges():
    out = []
    def add(u, v, w_s):
        out.append((u, v, w_s * S))
    add(0, 1, 5); add(1, 0, 5)
    add(0, 2, 3); add(2, 0, 3)
    add(2, 1, 2); add(1, 2, 4)
    add(1, 4, 5); add(4, 1, 5)
    add(2, 5, 5); add(5, 2, 5)
    add(5, 4, 2); add(4, 5, 9)
    add(4, 3, 3); add(3, 4, 3)
    add(5, 3, 3); add(3, 5, 3)
    add(5, 6, 10); add(6, 5, 10)
    return out

EX1_EDGES = _ex1_edges()


@pytest.fixture(scope="session")
def ex1_net():
    return RoadNetwork(EX1_COORDS, EX1_EDGES)


def ex1_request_dict(net):
    def req(rid, s, e, t_s, d_s):
        return make_request_with_deadline(net, rid, s, e, 1, t_s * S, d_s * S,
                                          w_max_ms=300 * S)
    rs = [
        req(1, 0, 3, 0, 30),
        req(2, 2, 5, 1, 19),
        req(3, 1, 4, 2, 21),
        req(4, 2, 6, 3, 21),
    ]
    return {r.id: r for r in rs}


@pytest.fixture(scope="session")
def ex1_requests(ex1_net):
    return ex1_request_dict(ex1_net)


def ex1_vehicle_list():
    return [Vehicle(id=1, capacity=3, node=0), Vehicle(id=2, capacity=3, node=2)]


@pytest.fixture
def ex1_vehicles():
    return ex1_vehicle_list()


def make_random_network(rng: random.Random, n_side: int = 5,
                        lo_s: float = 5.0, hi_s: float = 30.0) -> RoadNetwork:
    """Small random-weight lattice for property tests."""
    coords = {}
    for j in range(n_side):
        for i in range(n_side):
            coords[j * n_side + i] = (i * 0.01, j * 0.01)
    edges = []
    def w():
        return int(round(rng.uniform(lo_s, hi_s) * S))
    for j in range(n_side):
        for i in range(n_side):
            nid = j * n_side + i
            if i + 1 < n_side:
                edges.append((nid, nid + 1, w()))
                edges.append((nid + 1, nid, w()))
            if j + 1 < n_side:
                edges.append((nid, nid + n_side, w()))
                edges.append((nid + n_side, nid, w()))
    return RoadNetwork(coords, edges)
