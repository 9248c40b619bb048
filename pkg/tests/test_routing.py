import random

import pytest

from fttc.network import Position, SensorNode
from fttc.routing import BASE, RadioGraph, Unreachable, all_trajectories, build_graph, shortest_path
from oracles import simple_path_costs


def nodes_at(*xy, alive=None):
    return [SensorNode(i, Position(*p), 1.0, True if alive is None else alive[i]) for i, p in enumerate(xy)]


def test_build_graph_edges():
    far_base = Position(1000, 1000)
    g = build_graph(nodes_at((0, 0), (10, 0)), far_base, 25, bs_range=1)
    assert g.adj[0] == {1: 10.0}
    g = build_graph(nodes_at((0, 0), (30, 0)), far_base, 25, bs_range=1)
    assert g.adj[0] == {}
    g = build_graph(nodes_at((0, 0), (3, 4)), far_base, 5, bs_range=1)
    assert g.adj[0][1] == 5.0


def test_build_graph_skips_dead_nodes():
    g = build_graph(nodes_at((0, 0), (1, 0), alive=[True, False]), Position(0, 5), 25, bs_range=10)
    assert g.node_ids == [0]


def test_default_sink_band_reaches_nearest_node():
    g = build_graph(nodes_at((0, 0), (0, 30), (0, 50)), Position(0, 100), 25)
    # nearest is 50 m from the sink, the band extends to 75 m
    assert sorted(g.adj[BASE]) == [1, 2]


def chain_graph():
    g = RadioGraph()
    g.add_edge(0, 1, 10)
    g.add_edge(1, BASE, 10)
    g.add_edge(0, BASE, 25)
    return g


def test_single_hop():
    g = RadioGraph()
    g.add_edge(0, BASE, 20)
    t = shortest_path(g, 0)
    assert t.node_path == (0,) and t.cost == 20


def test_two_hops_beat_direct_edge():
    t = shortest_path(chain_graph(), 0)
    assert t.node_path == (0, 1)
    assert t.cost == 20


def test_isolated_node_unreachable():
    g = chain_graph()
    g.add_vertex(7)
    with pytest.raises(Unreachable):
        shortest_path(g, 7)
    with pytest.raises(KeyError):
        shortest_path(g, 99)


def test_tie_prefers_fewer_hops():
    g = RadioGraph()
    g.add_edge(0, BASE, 20)
    g.add_edge(0, 1, 10)
    g.add_edge(1, BASE, 10)
    assert shortest_path(g, 0).node_path == (0,)


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        RadioGraph().add_edge(0, 1, -1)


def test_all_trajectories():
    g = RadioGraph()
    for u, v in [(0, 1), (1, 2), (0, 2)]:
        g.add_edge(u, v, 5)
    g.add_edge(2, BASE, 5)
    trajs, missing = all_trajectories(g)
    assert [t.t_id for t in trajs] == [0, 1, 2] and missing == []
    g.add_vertex(3)
    trajs, missing = all_trajectories(g)
    assert len(trajs) == 3 and missing == [3]
    assert all_trajectories(g) == (trajs, missing)


def random_graph(rng, n):
    g = RadioGraph()
    verts = list(range(n - 1)) + [BASE]
    for v in verts:
        g.add_vertex(v)
    for i, u in enumerate(verts):
        for v in verts[i + 1:]:
            if rng.random() < 0.45:
                g.add_edge(u, v, rng.randint(1, 20))
    return g


def test_dijkstra_matches_exhaustive_enumeration():
    rng = random.Random(7)
    checked = 0
    for _ in range(200):
        g = random_graph(rng, rng.randint(2, 8))
        for v in g.node_ids:
            costs = simple_path_costs(g.adj, v, BASE)
            if not costs:
                with pytest.raises(Unreachable):
                    shortest_path(g, v)
                continue
            t = shortest_path(g, v)
            assert t.cost == min(costs)
            checked += 1
    assert checked > 300
