import math

import numpy as np
import pytest

from fttc import energy as en
from fttc.network import NetworkConfig, Position, SensorNode
from fttc.sim import (BASELINE, FTTC, RoundMetrics, Simulation, assign_members, lifetime_summary,
                      parse_fault_script)


def single_node_sim(protocol=FTTC):
    cfg = NetworkConfig(n_nodes=1)
    node = SensorNode(0, Position(50.0, 100.0), 2.0)  # 90 m below the sink
    return Simulation(cfg, protocol, nodes=[node])


@pytest.mark.parametrize("protocol", [FTTC, BASELINE])
def test_single_node_closed_form(protocol):
    per_round = en.aggregation_energy(4128, 1) + en.transmit_energy(4128, 90)
    assert per_round == pytest.approx(5.7913e-4, rel=1e-4)
    expected = math.floor(2.0 / per_round)
    assert expected == 3453
    sim = single_node_sim(protocol)
    metrics = sim.run()
    s = lifetime_summary(metrics, 1)
    assert s.first_death_round == s.half_death_round == s.last_death_round == 3453
    assert s.packets_total == 3453 == metrics[-1].packets_delivered_cum


def small_field(n=30, **kw):
    return NetworkConfig(n_nodes=n, initial_energy=0.05, **kw)


@pytest.mark.parametrize("protocol", [FTTC, BASELINE])
def test_conservation_and_monotone_series(protocol):
    sim = Simulation(small_field(rng_seed=3), protocol, faults={40: [0, 1]})
    metrics = sim.run()
    spent = sim.initial_total - math.fsum(sim.energy)
    assert math.isclose(spent, sim.total_charged(), rel_tol=1e-9)
    assert metrics[-1].alive == 0
    for prev, cur in zip(metrics, metrics[1:]):
        assert cur.alive <= prev.alive
        assert cur.packets_delivered_cum >= prev.packets_delivered_cum
        # heads are drawn from nodes alive at the start of the round
        assert set(cur.heads) <= {i for i in range(30)} and len(cur.heads) <= prev.alive


def test_heads_are_alive_every_round():
    sim = Simulation(small_field(rng_seed=1), FTTC)
    while any(sim.alive):
        alive_before = set(sim.alive_ids)
        m = sim.step()
        assert set(m.heads) <= alive_before


def test_determinism():
    a = Simulation(small_field(rng_seed=8), BASELINE).run()
    b = Simulation(small_field(rng_seed=8), BASELINE).run()
    assert a == b
    c = Simulation(small_field(rng_seed=8), FTTC, faults={5: [3]}).run()
    d = Simulation(small_field(rng_seed=8), FTTC, faults={5: [3]}).run()
    assert c == d


def test_max_rounds_zero():
    assert Simulation(NetworkConfig(max_rounds=0)).run() == []


def test_constant_heads_without_rotation_or_reclustering():
    cfg = small_field(recluster_period=math.inf, rotation=False)
    sim = Simulation(cfg, FTTC)
    first = sim.step().heads
    while any(sim.alive):
        m = sim.step()
        if m.heads != first:
            # only a head death can change the set
            assert not all(sim.alive[h] for h in first) or len(m.heads) < len(first)
            break


def test_baseline_all_heads_when_m_exceeds_alive():
    sim = Simulation(NetworkConfig(n_nodes=3, n_clusters=5), BASELINE)
    assert sim.step().heads == (0, 1, 2)


def test_baseline_seeds_give_different_heads():
    heads = {Simulation(NetworkConfig(rng_seed=s), BASELINE).step().heads for s in range(5)}
    assert len(heads) > 1


def test_assign_members_tie_and_single_head():
    pos = np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 0.0], [-10.0, 0.0]])
    assert assign_members(pos, [0, 1, 2, 3], [1]) == {0: 1, 1: 1, 2: 1, 3: 1}
    mapping = assign_members(pos, [0, 1, 2, 3], [3, 1])
    assert mapping[0] == 1  # equidistant, lower id wins
    assert mapping[2] == 1 and mapping[3] == 3


def rotation_sim(energies):
    nodes = [SensorNode(i, Position(50.0 + i, 50.0), e) for i, e in enumerate(energies)]
    sim = Simulation(NetworkConfig(n_nodes=len(nodes), n_clusters=1), FTTC, nodes=nodes)
    sim._set_heads([0])
    return sim


def test_rotation_keeps_richest_head():
    sim = rotation_sim([1.0, 0.5, 0.9])
    assert not sim.rotate_if_needed()
    assert sim.heads == [0]


def test_rotation_hands_over_to_richest_member():
    sim = rotation_sim([0.1, 0.5, 0.9])
    assert sim.rotate_if_needed()
    assert sim.heads == [2]
    assert sim.member_of == {0: 2, 1: 2, 2: 2}


def test_rotation_lone_head_is_kept():
    sim = rotation_sim([0.1, 0.5])
    sim.alive[1] = False
    assert not sim.rotate_if_needed()


def test_failover_to_next_ranked_plan():
    sim = Simulation(NetworkConfig(rng_seed=2), FTTC)
    sim.step()
    # rotation has already moved headship, so kill the heads in service
    sim.faults = {2: [h for h in sim.heads if h not in sim.priority_plans[1].head_node_ids]}
    sim.step()
    failovers = [e for e in sim.events if e[0] == 2 and e[1] == "failover"]
    assert failovers and failovers[0][2] >= 2
    assert all(sim.alive[h] for h in sim.heads)


def test_failover_without_rotation_keeps_ranked_heads():
    sim = Simulation(NetworkConfig(rng_seed=2, rotation=False), FTTC)
    sim.step()
    plans = sim.priority_plans
    sim.faults = {2: [h for h in plans[0].head_node_ids if h not in plans[1].head_node_ids]}
    sim.step()
    assert sim.active_rank >= 2
    assert tuple(sim.heads) == plans[sim.active_rank - 1].head_node_ids


def test_failover_falls_back_to_setup_when_all_ranks_hit():
    sim = Simulation(NetworkConfig(rng_seed=2), FTTC)
    sim.step()
    victims = {h for p in sim.priority_plans for h in p.head_node_ids}
    setups = sim.setup_count
    sim.faults = {2: sorted(victims)}
    sim.step()
    assert sim.setup_count == setups + 1
    assert not victims & set(sim.heads)


def test_lifetime_summary_unreached():
    metrics = [RoundMetrics(r, 10, 10 * r, 1.0, ()) for r in range(1, 6)]
    s = lifetime_summary(metrics, 10)
    assert (s.first_death_round, s.half_death_round, s.last_death_round) == (None, None, None)
    assert s.packets_total == 50
    assert s.fmt(s.first_death_round, 5) == ">5"
    with pytest.raises(ValueError):
        lifetime_summary([], 10)


def test_lifetime_summary_milestones():
    alive = [4, 4, 3, 2, 2, 0]
    metrics = [RoundMetrics(r, a, r, 0.0, ()) for r, a in enumerate(alive, start=1)]
    s = lifetime_summary(metrics, 4)
    assert (s.first_death_round, s.half_death_round, s.last_death_round) == (2, 3, 5)


def test_parse_fault_script():
    text = "# faults\nkill 50 3\n\nkill 50 7  # second\nkill 60 1\n"
    assert parse_fault_script(text) == {50: [3, 7], 60: [1]}
    with pytest.raises(ValueError, match="line 2"):
        parse_fault_script("kill 1 1\nexplode 2 2\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_fault_script("kill x 1")


def test_invalid_protocol_and_config():
    with pytest.raises(ValueError):
        Simulation(NetworkConfig(), "leach")
    with pytest.raises(ValueError):
        Simulation(NetworkConfig(initial_energy=0))
