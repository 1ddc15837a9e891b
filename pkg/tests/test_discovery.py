import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from conftest import chain, dense_random
from meshroute.discovery import (
    MISSING,
    HopMatrix,
    MessageLedger,
    RouteTable,
    bfs_hops,
    build_hop_matrix,
    build_route_table,
    flood_message_count,
    incomplete_discovery,
    validate_path,
)
from meshroute.errors import ConsistencyError
from meshroute.netmodel import Region, block_edges, generate_network, network_from_positions


def dijkstra_hops(net, use_observed):
    adj = csr_matrix(net.adjacency(use_observed).astype(float))
    d = shortest_path(adj, method="D", unweighted=True, indices=list(net.gateways))
    return np.where(np.isinf(d), MISSING, d).astype(np.int64)


@given(seed=st.integers(0, 10**6), blocked=st.sampled_from([0.0, 0.2, 0.5]))
def test_hop_matrix_matches_dijkstra(seed, blocked):
    net = dense_random(seed, n=30, side=4.0, blocked=blocked)
    for obs in (True, False):
        assert np.array_equal(build_hop_matrix(net, obs).hops, dijkstra_hops(net, obs))


def test_chain_hops(chain5):
    assert bfs_hops(chain5, 0) == [0, 1, 2, 3, 4]
    assert bfs_hops(chain5, 3)[3] == 0


def test_blocked_middle_cuts_far_side(chain5):
    mid = [k for k, (i, j) in enumerate(chain5.edges.tolist()) if (i, j) == (1, 2)]
    mask = np.zeros(chain5.n_edges, dtype=bool)
    mask[mid] = True
    net = chain5.with_blocked(mask)
    assert bfs_hops(net, 0, use_observed=True) == [0, 1, None, None, None]
    assert bfs_hops(net, 0, use_observed=False) == [0, 1, 2, 3, 4]


def test_complete_graph_matrix():
    net = network_from_positions([(0, 0), (0.3, 0), (0, 0.3), (0.3, 0.3)], [0, 1, 2])
    hm = build_hop_matrix(net)
    assert hm.shape == (3, 4)
    assert hm.n_observed == 12
    for gi, g in enumerate(net.gateways):
        assert hm.hops[gi, g] == 0
    assert (hm.hops[hm.hops > 0] == 1).all()


def test_two_components_missing_exactly_on_far_side():
    pos = [(0, 0), (0.5, 0), (1.0, 0), (1.5, 0), (5, 0), (5.5, 0)]
    net = network_from_positions(pos, [0, 1, 2])
    hm = build_hop_matrix(net)
    assert (hm.hops[:, 4:] == MISSING).all()
    assert (hm.hops[:, :4] != MISSING).all()


def test_incomplete_discovery_accepts_only_stable_counts(random_net):
    acc, prov = incomplete_discovery(random_net)
    true = build_hop_matrix(random_net, use_observed=False)
    assert np.array_equal(prov.hops, dijkstra_hops(random_net, True))
    assert np.array_equal(acc.hops[acc.omega], true.hops[acc.omega])
    assert (acc.omega <= prov.omega).all()


def test_blocking_loses_entries_with_positive_probability():
    lost = 0
    for s in range(10):
        net = generate_network(100, 10, Region.square(np.sqrt(99 * np.pi / 6)), 1.0, seed=s)
        acc, _ = incomplete_discovery(block_edges(net, 0.2, seed=s))
        lost += acc.n_observed < 1000
    assert lost > 0


def test_route_table_paths(random_net):
    hm = build_hop_matrix(random_net, True)
    table = build_route_table(random_net, hm, True)
    for gi, g in enumerate(random_net.gateways):
        assert table.path(g, g) == [g]
        for n in range(random_net.n_nodes):
            p = table.path(g, n)
            if hm.hops[gi, n] == MISSING:
                assert p is None
            else:
                assert p[0] == g and p[-1] == n
                assert len(p) - 1 == hm.hops[gi, n]
                assert validate_path(random_net, p, True)


def test_chain_paths_unique(chain5):
    table = build_route_table(chain5, build_hop_matrix(chain5), True)
    assert table.path(0, 4) == [0, 1, 2, 3, 4]
    assert table.path(4, 1) == [4, 3, 2, 1]


def test_route_table_rejects_tampered_matrix(chain5):
    hm = build_hop_matrix(chain5)
    hm.hops[0, 4] = 2
    with pytest.raises(ConsistencyError):
        build_route_table(chain5, hm, True)


def test_flood_counts():
    net = network_from_positions([(0, 0), (0.3, 0), (0, 0.3), (0.3, 0.3), (0.1, 0.1)], [0, 1, 2])
    assert flood_message_count(net, [0]).total() == 5
    lone = network_from_positions([(0, 0), (5, 0), (0, 5), (5, 5)], [0, 1, 2])
    assert flood_message_count(lone, [3]).total() == 1
    split = network_from_positions([(0, 0), (0.5, 0), (1.0, 0), (6, 0), (6.5, 0)], [0, 3, 4])
    assert flood_message_count(split, [0]).total() == 3
    assert flood_message_count(split, [3]).total() == 2


def test_hop_matrix_csv_round_trip(random_net, tmp_path):
    acc, _ = incomplete_discovery(random_net)
    p = tmp_path / "hops.csv"
    acc.to_csv(p)
    back = HopMatrix.from_csv(p)
    assert back.gateways == acc.gateways
    assert np.array_equal(back.hops, acc.hops)


def test_route_table_csv(chain5):
    table = build_route_table(chain5, build_hop_matrix(chain5), True)
    text = table.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "gateway,target,hop_count,path,verified"
    assert len(lines) == 1 + 3 * 5


def test_ledger_phases():
    a, b = MessageLedger(), MessageLedger()
    a.add("x", 1)
    a.add("x", 1, 2)
    b.add("y", 4)
    a.merge(b)
    assert a.total("x") == 3
    assert a.total() == 4
    assert a.totals() == {"x": 3, "y": 1}
