"""Round-based lifetime simulation for trajectory-clustered and baseline heads.

A run deploys the field, then repeats: (re)build clusters when due, run one
collect/fuse/uplink round, rotate exhausted heads and fail over to ranked
alternate head sets when heads die. Every debit is logged so a run's energy
books can be audited against its residuals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import energy as en
from .network import (RNG_ALGORITHM, NetworkConfig, Role, SensorNode,
                      deploy, make_rng, validate_config)
from .routing import all_trajectories, build_graph
from .trajcluster import (ClusterPlan, HeadPlan, build_matrix, fault_tolerant_plans,
                          plan_for_head_count)

logger = logging.getLogger(__name__)

FTTC = "fttc"
BASELINE = "baseline"
PROTOCOLS = (FTTC, BASELINE)


class NetworkDead(RuntimeError):
    pass


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    alive: int
    packets_delivered_cum: int
    total_residual_j: float
    heads: tuple[int, ...]


@dataclass
class LifetimeSummary:
    first_death_round: int | None
    half_death_round: int | None
    last_death_round: int | None
    packets_total: int

    @staticmethod
    def fmt(value: int | None, max_rounds: int) -> str:
        return f">{max_rounds}" if value is None else str(value)


def parse_fault_script(text: str) -> dict[int, list[int]]:
    """Parse ``kill <round> <node_id>`` lines into ``{round: [node ids]}``."""
    faults: dict[int, list[int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != "kill":
            raise ValueError(f"line {lineno}: expected 'kill <round> <node_id>', got {raw!r}")
        try:
            rnd, nid = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: round and node id must be integers") from None
        if rnd < 1 or nid < 0:
            raise ValueError(f"line {lineno}: round must be >= 1 and node id >= 0")
        faults.setdefault(rnd, []).append(nid)
    return faults


def assign_members(positions: np.ndarray, alive_ids: Sequence[int], head_ids: Sequence[int]) -> dict[int, int]:
    """Map each alive node to its Euclidean-nearest head (lowest id on ties);
    heads map to themselves."""
    heads = sorted(head_ids)
    if not heads:
        raise ValueError("need at least one head")
    ids = np.asarray(sorted(alive_ids), dtype=int)
    if ids.size == 0:
        return {}
    diff = positions[ids][:, None, :] - positions[heads][None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    nearest = np.argmin(dist, axis=1)
    mapping = {int(i): heads[j] for i, j in zip(ids, nearest)}
    for h in heads:
        mapping[h] = h
    return mapping


def lifetime_summary(metrics: Sequence[RoundMetrics], n_nodes: int) -> LifetimeSummary:
    """Death milestones as the number of rounds completed before the alive
    count first fell below N, to N/2 or below, and to zero. ``None`` means
    the milestone was not reached within the recorded rounds."""
    if not metrics:
        raise ValueError("no metrics recorded")

    def milestone(cond):
        for m in metrics:
            if cond(m.alive):
                return m.round - 1
        return None

    return LifetimeSummary(
        milestone(lambda a: a < n_nodes),
        milestone(lambda a: a <= n_nodes / 2),
        milestone(lambda a: a == 0),
        metrics[-1].packets_delivered_cum,
    )


class Simulation:
    """One seeded run of a protocol over a freshly deployed field.

    ``faults`` maps a round to node ids whose batteries fail at its start.
    Pass ``nodes`` to run on a hand-built deployment instead of a random one.
    """

    def __init__(self, config: NetworkConfig, protocol: str = FTTC,
                 faults: dict[int, list[int]] | None = None,
                 params: en.EnergyParams = en.DEFAULT_PARAMS,
                 nodes: Sequence[SensorNode] | None = None):
        errors = validate_config(config)
        if errors:
            raise ValueError("invalid config: " + "; ".join(map(str, errors)))
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        self.config = config
        self.protocol = protocol
        self.params = params
        self.faults = faults or {}
        self.rng = make_rng(config.rng_seed)
        if nodes is None:
            nodes = deploy(config, self.rng)
        self._nodes = [SensorNode(n.id, n.position, n.residual_energy, n.alive, n.role) for n in nodes]
        if [n.id for n in self._nodes] != list(range(len(self._nodes))):
            raise ValueError("node ids must be 0..N-1 in order")
        self.n = len(self._nodes)
        self.pos = np.array([(n.position.x, n.position.y) for n in self._nodes], dtype=float)
        self.alive = [n.alive and n.residual_energy > 0 for n in self._nodes]
        self.energy = [float(n.residual_energy) if a else 0.0 for n, a in zip(self._nodes, self.alive)]
        self.initial_total = math.fsum(self.energy)
        bs = config.base_station
        self.to_base = [n.position.distance(bs) for n in self._nodes]
        b = config.message_bits
        self._uplink = [en.transmit_energy(b, d, params) for d in self.to_base]
        self._rx = en.receive_energy(b, params)
        self._da = en.aggregation_energy(b, 1, params)

        self.round = 0
        self.heads: list[int] = []
        self.member_of: dict[int, int] = {}
        self._links: list[tuple[int, int, float]] = []
        self.priority_plans: list[HeadPlan] = []
        self.active_rank = 0
        self.cluster_plan: ClusterPlan | None = None
        self.needs_setup = True
        self.last_setup_round = 0
        self.setup_count = 0
        self.packets = 0
        self.metrics: list[RoundMetrics] = []
        self.charged: list[float] = []
        self.fault_drained: list[float] = []
        self._epoch_cache: dict[tuple[int, ...], tuple] = {}
        # (round, event, detail): "setup" with the head set, "failover" with
        # the activated rank, "rotate" with the new head set
        self.events: list[tuple[int, str, object]] = []

    # -- state views -------------------------------------------------------

    @property
    def nodes(self) -> list[SensorNode]:
        head_set = set(self.heads)
        for n in self._nodes:
            n.residual_energy = self.energy[n.id]
            n.alive = self.alive[n.id]
            n.role = Role.CLUSTER_HEAD if n.id in head_set and n.alive else Role.MEMBER
        return self._nodes

    @property
    def alive_ids(self) -> list[int]:
        return [i for i, a in enumerate(self.alive) if a]

    def total_charged(self) -> float:
        """Every joule debited so far, including batteries killed by faults."""
        return math.fsum(self.charged) + math.fsum(self.fault_drained)

    def metadata(self) -> dict[str, str]:
        return {
            "protocol": self.protocol,
            "rng_algorithm": RNG_ALGORITHM,
            "rng_seed": str(self.config.rng_seed),
            "uncharged": "hello packets, cluster broadcasts, idle listening",
        }

    # -- energy ------------------------------------------------------------

    def _charge(self, node: int, cost: float, log: list[float]) -> bool:
        """Debit ``cost``; a node that cannot afford it dies at 0 J instead."""
        e = self.energy[node]
        if cost <= e:
            log.append(cost)
            e -= cost
            if e <= 0.0:
                e = 0.0
                self.alive[node] = False
            self.energy[node] = e
            return True
        log.append(e)
        self.energy[node] = 0.0
        self.alive[node] = False
        return False

    def _cluster_count(self, n_candidates: int) -> int:
        if self.config.n_clusters:
            m = self.config.n_clusters
        else:
            try:
                _, m = en.optimal_cluster_count(n_candidates, self.config.field_side,
                                                self.config.bs_distance, self.params)
            except en.NoOptimumError:
                m = self.config.fallback_clusters
        return max(1, min(m, n_candidates))

    def _head_lifetime(self, head: int, n_messages: int) -> float:
        per_round = en.head_round_energy(self.config.message_bits, n_messages,
                                         self.to_base[head], self.params)
        if per_round <= 0:
            return math.inf
        return math.floor(self.energy[head] / per_round)

    # -- protocol phases ---------------------------------------------------

    def epoch_setup(self):
        """Elect heads for a new epoch and split the alive nodes among them."""
        alive = self.alive_ids
        if not alive:
            raise NetworkDead("no alive nodes")
        if self.protocol == BASELINE:
            self._baseline_setup(alive)
        else:
            self._fttc_setup(alive)
        self.needs_setup = False
        self.last_setup_round = self.round
        self.setup_count += 1
        self.events.append((self.round, "setup", tuple(self.heads)))

    def _assign(self, heads: Sequence[int]) -> dict[int, int]:
        return assign_members(self.pos, self.alive_ids, heads)

    def _fttc_setup(self, alive: list[int]):
        # Head sets depend only on which nodes are alive; lifetimes also
        # depend on residual energy and are refreshed every time.
        key = tuple(alive)
        cached = self._epoch_cache.get(key)
        if cached is None:
            graph = build_graph(self.nodes, self.config.base_station, self.config.comm_range,
                                self.config.bs_range)
            trajs, unreachable = all_trajectories(graph)
            if unreachable:
                logger.debug("round %d: %d nodes without a route", self.round, len(unreachable))
            m = build_matrix(trajs)
            plan = plan_for_head_count(m, trajs, self._cluster_count(len(alive)))
            plans = fault_tolerant_plans(plan, m, trajs, self.config.ft_depth,
                                         self._assign, self._head_lifetime)
            cached = (plan, plans)
            self._epoch_cache = {key: cached}
        plan, plans = cached
        self.cluster_plan = plan
        self.priority_plans = [
            replace(hp, expected_lifetime_rounds=int(min(
                self._head_lifetime(h, hp.members_per_head[h]) for h in hp.head_node_ids)))
            for hp in plans]
        self._activate(self.priority_plans[0])

    def _activate(self, plan: HeadPlan):
        self.active_rank = plan.rank
        self._set_heads(plan.head_node_ids)

    def _set_heads(self, heads: Iterable[int]):
        self.heads = sorted(heads)
        self.member_of = self._assign(self.heads)
        pairs = [(n, h) for n, h in sorted(self.member_of.items()) if n != h]
        if not pairs:
            self._links = []
            return
        src, dst = np.array(pairs).T
        d = np.hypot(*(self.pos[src] - self.pos[dst]).T)
        p, b = self.params, self.config.message_bits
        cost = p.E_Tx * b + np.where(d < p.d0, p.eps1 * d**2, p.eps2 * d**4) * b
        self._links = list(zip(src.tolist(), dst.tolist(), cost.tolist()))

    def _baseline_setup(self, alive: list[int]):
        m = self._cluster_count(len(alive))
        picks = self.rng.choice(len(alive), size=m, replace=False)
        self._set_heads(alive[i] for i in picks)
        self.priority_plans = []
        self.active_rank = 0

    def run_round(self):
        """Collect, fuse and uplink one round of sensed data.

        Members transmit first; each head then pays reception per message,
        fusion of everything it holds including its own reading, and the
        uplink. A node that cannot afford an action dies at 0 J without
        completing it.
        """
        if not any(self.alive):
            raise NetworkDead("no alive nodes")
        energy, alive = self.energy, self.alive
        spent = 0.0
        received = dict.fromkeys(self.heads, 0)
        for node, h, cost in self._links:
            if not (alive[node] and alive[h]):
                continue
            e = energy[node]
            if cost < e:
                energy[node] = e - cost
                spent += cost
                received[h] += 1
            else:
                # exact payment also leaves the node empty
                if cost == e:
                    received[h] += 1
                energy[node] = 0.0
                alive[node] = False
                spent += e
        log = [spent]
        for h in self.heads:
            if not alive[h]:
                continue
            k = received[h]
            if ((k == 0 or self._charge(h, k * self._rx, log))
                    and self._charge(h, (k + 1) * self._da, log)
                    and self._charge(h, self._uplink[h], log)):
                self.packets += k + 1
        self.charged.append(math.fsum(log))

    def rotate_if_needed(self) -> bool:
        """Hand headship to the richest member when a head falls below the
        poorest member of its cluster, then re-split the network around the
        new head set. Returns True if any head changed."""
        if self.protocol != FTTC or not self.config.rotation:
            return False
        energy, alive = self.energy, self.alive
        poorest = [math.inf] * self.n
        richest = [-math.inf] * self.n
        successor = list(range(self.n))
        for node, h, _ in self._links:  # sorted by node id, so ties keep the lowest
            if alive[node]:
                e = energy[node]
                if e < poorest[h]:
                    poorest[h] = e
                if e > richest[h]:
                    richest[h] = e
                    successor[h] = node
        new_heads = [successor[h] if alive[h] and energy[h] < poorest[h] else h for h in self.heads]
        if new_heads == self.heads:
            return False
        # the rotated set stands in for the active ranked plan, so failover
        # keeps moving down the list from the same rank
        self._set_heads(set(new_heads))
        self.events.append((self.round, "rotate", tuple(self.heads)))
        return True

    def apply_fault_tolerance(self) -> bool:
        """Fail over to the next ranked head set whose heads are all alive.

        Returns True if a failover happened; schedules a full re-election
        when no ranked plan qualifies. Baseline heads have no ranked
        alternates and are simply re-drawn.
        """
        if all(self.alive[h] for h in self.heads):
            return False
        if self.protocol == FTTC:
            for plan in self.priority_plans:
                if plan.rank > self.active_rank and all(self.alive[h] for h in plan.head_node_ids):
                    self._activate(plan)
                    self.events.append((self.round, "failover", plan.rank))
                    return True
        self.needs_setup = True
        return False

    def _inject_faults(self):
        for nid in self.faults.get(self.round, ()):
            if 0 <= nid < self.n and self.alive[nid]:
                self.fault_drained.append(self.energy[nid])
                self.energy[nid] = 0.0
                self.alive[nid] = False

    def _due(self) -> bool:
        period = self.config.recluster_period
        return period != math.inf and (self.round - self.last_setup_round) >= period

    def step(self) -> RoundMetrics:
        """Advance one round and return its metrics."""
        if not any(self.alive):
            raise NetworkDead("no alive nodes")
        self.round += 1
        self._inject_faults()
        if not any(self.alive):
            return self._record(())
        self.apply_fault_tolerance()
        if self.needs_setup or self._due():
            self.epoch_setup()
        heads = tuple(h for h in self.heads if self.alive[h])
        self.run_round()
        self.rotate_if_needed()
        self.apply_fault_tolerance()
        return self._record(heads)

    def _record(self, heads) -> RoundMetrics:
        m = RoundMetrics(self.round, sum(self.alive), self.packets,
                         math.fsum(self.energy), tuple(sorted(heads)))
        self.metrics.append(m)
        return m

    def run(self) -> list[RoundMetrics]:
        while self.round < self.config.max_rounds and any(self.alive):
            self.step()
        return self.metrics


def run_simulation(config: NetworkConfig, protocol: str = FTTC,
                   faults: dict[int, list[int]] | None = None) -> list[RoundMetrics]:
    return Simulation(config, protocol, faults).run()
