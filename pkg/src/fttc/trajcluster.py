"""Trajectory dissimilarity, medoid clustering and ranked head plans.

Trajectories are compared through the positions of the nodes they visit.
Clustering follows a leader pass under a distance threshold, then medoid
refinement until the set of representatives stops changing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .network import Position
from .routing import Trajectory

logger = logging.getLogger(__name__)

MAX_RECLUSTER_ITERATIONS = 100


def point_to_traj(p: Position, t: Trajectory) -> float:
    """Distance from ``p`` to the closest vertex of ``t``."""
    if not t.point_path:
        raise ValueError("empty trajectory")
    return min(p.distance(q) for q in t.point_path)


def one_way(t1: Trajectory, t2: Trajectory) -> float:
    """Mean over the vertices of ``t1`` of their distance to ``t2``."""
    if not t1.point_path:
        raise ValueError("empty trajectory")
    return sum(point_to_traj(p, t2) for p in t1.point_path) / len(t1.point_path)


def traj_dist(t1: Trajectory, t2: Trajectory) -> float:
    return max(one_way(t1, t2), one_way(t2, t1))


@dataclass
class DissimilarityMatrix:
    d: np.ndarray
    ids: tuple[int, ...] = ()

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)
        if self.d.ndim != 2 or self.d.shape[0] != self.d.shape[1]:
            raise ValueError("dissimilarity matrix must be square")
        if not self.ids:
            self.ids = tuple(range(self.n))

    @property
    def n(self) -> int:
        return self.d.shape[0]


def build_matrix(trajs: Sequence[Trajectory]) -> DissimilarityMatrix:
    """Pairwise :func:`traj_dist` for ``trajs`` (indices follow input order)."""
    if not trajs:
        raise ValueError("need at least one trajectory")
    # Index every distinct vertex once, then min-reduce per trajectory.
    vertex_of: dict[int, int] = {}
    coords = []
    for t in trajs:
        for nid, p in zip(t.node_path, t.point_path):
            if nid not in vertex_of:
                vertex_of[nid] = len(coords)
                coords.append((p.x, p.y))
    xy = np.array(coords)
    pair = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    members = [np.array([vertex_of[v] for v in t.node_path]) for t in trajs]
    # to_traj[v, j]: distance from vertex v to trajectory j
    to_traj = np.stack([pair[:, m].min(axis=1) for m in members], axis=1)
    one_way_m = np.stack([to_traj[m].mean(axis=0) for m in members])
    d = np.maximum(one_way_m, one_way_m.T)
    np.fill_diagonal(d, 0.0)
    return DissimilarityMatrix(d, tuple(t.t_id for t in trajs))


@dataclass
class ClusterPlan:
    """Clusters as lists of matrix indices, with one representative each."""

    clusters: list[list[int]]
    representatives: list[int] = field(default_factory=list)
    threshold: float = math.nan
    iterations: int = 0
    converged: bool = True

    @property
    def k(self) -> int:
        return len(self.clusters)


def init_clusters(m: DissimilarityMatrix, threshold: float) -> ClusterPlan:
    """Sequential leader clustering.

    The lowest unclassified index seeds a cluster and takes every other
    unclassified index within ``threshold`` of the seed.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    unassigned = np.ones(m.n, dtype=bool)
    clusters = []
    for seed in range(m.n):
        if not unassigned[seed]:
            continue
        take = unassigned & (m.d[seed] <= threshold)
        take[seed] = True
        members = np.flatnonzero(take).tolist()
        unassigned[members] = False
        clusters.append(members)
    return ClusterPlan(clusters, threshold=threshold)


def cumulative_dissimilarity(cluster: Sequence[int], m: DissimilarityMatrix) -> np.ndarray:
    idx = np.asarray(cluster)
    return m.d[np.ix_(idx, idx)].sum(axis=1)


def rep_traj(cluster: Sequence[int], m: DissimilarityMatrix) -> int:
    """Medoid of ``cluster``: least total dissimilarity, lowest index on ties."""
    if len(cluster) == 0:
        raise ValueError("empty cluster")
    ordered = sorted(cluster)
    sums = cumulative_dissimilarity(ordered, m)
    return ordered[int(np.argmin(sums))]


def within_cost(plan: ClusterPlan, m: DissimilarityMatrix) -> float:
    """Sum over clusters of each member's dissimilarity to its representative."""
    return float(sum(m.d[c, r].sum() for c, r in zip(plan.clusters, plan.representatives)))


def _assign(m: DissimilarityMatrix, reps: list[int]) -> list[list[int]]:
    order = sorted(reps)
    nearest = np.argmin(m.d[:, order], axis=1)  # first minimum = lowest rep index
    for j, r in enumerate(order):
        nearest[r] = j
    return [np.flatnonzero(nearest == j).tolist() for j in range(len(order))]


def recluster(m: DissimilarityMatrix, initial_reps: Sequence[int],
              on_iteration: Callable[[ClusterPlan], None] | None = None) -> ClusterPlan:
    """Alternate nearest-representative assignment and medoid update.

    Stops when the representative set is unchanged or after
    :data:`MAX_RECLUSTER_ITERATIONS`; hitting the cap is logged and reported
    through ``converged=False``.
    """
    reps = sorted(initial_reps)
    if not reps or len(set(reps)) != len(reps):
        raise ValueError("initial representatives must be non-empty and distinct")
    for it in range(1, MAX_RECLUSTER_ITERATIONS + 1):
        clusters = _assign(m, reps)
        new_reps = [rep_traj(c, m) for c in clusters]
        plan = ClusterPlan(clusters, new_reps, iterations=it)
        if on_iteration is not None:
            on_iteration(plan)
        if sorted(new_reps) == reps:
            return plan
        reps = sorted(new_reps)
    logger.warning("recluster hit the %d-iteration cap", MAX_RECLUSTER_ITERATIONS)
    plan.converged = False
    return plan


def tune_threshold(m: DissimilarityMatrix, target_k: int) -> tuple[float, ClusterPlan]:
    """Pick the leader-clustering threshold whose cluster count is closest to
    ``target_k``; the smaller threshold wins ties.

    The count only changes at matrix entries, so the search bisects over the
    sorted distinct entries and then inspects the neighbours of the crossing.
    """
    if not 1 <= target_k <= m.n:
        raise ValueError("target_k must lie in [1, n]")
    candidates = np.unique(m.d)  # sorted, includes 0
    best = None
    lo, hi = 0, len(candidates) - 1
    seen: dict[int, ClusterPlan] = {}

    def count(i):
        if i not in seen:
            seen[i] = init_clusters(m, float(candidates[i]))
        return seen[i].k

    # Bisection toward the boundary where the count crosses target_k.
    while lo < hi:
        mid = (lo + hi) // 2
        if count(mid) > target_k:
            lo = mid + 1
        else:
            hi = mid
    for i in (lo - 1, lo, lo + 1):
        if 0 <= i < len(candidates):
            count(i)
    for i in sorted(seen):
        key = (abs(seen[i].k - target_k), i)
        if best is None or key < best[0]:
            best = (key, i)
    plan = seen[best[1]]
    plan.representatives = [rep_traj(c, m) for c in plan.clusters]
    return plan.threshold, plan


def head_nodes(plan: ClusterPlan, trajs: Sequence[Trajectory]) -> list[int]:
    """Node ids lying on the plan's representative trajectories."""
    return sorted({nid for r in plan.representatives for nid in trajs[r].node_path})


def plan_for_head_count(m: DissimilarityMatrix, trajs: Sequence[Trajectory],
                        target_heads: int) -> ClusterPlan:
    """Refined plan whose representative trajectories carry a number of
    distinct nodes closest to ``target_heads`` (fewer clusters on ties).

    Cluster counts are tried upward from one; the scan stops once the head
    count overshoots the target.
    """
    best = None
    for k in range(1, m.n + 1):
        _, init = tune_threshold(m, k)
        plan = recluster(m, init.representatives)
        plan.threshold = init.threshold
        n_heads = len(head_nodes(plan, trajs))
        key = (abs(n_heads - target_heads), k)
        if best is None or key < best[0]:
            best = (key, plan)
        if n_heads >= target_heads:
            break
    return best[1]


@dataclass
class HeadPlan:
    rank: int
    head_node_ids: tuple[int, ...]
    members_per_head: dict[int, int]
    expected_lifetime_rounds: int
    trajectories: tuple[int, ...] = ()


def ranked_representatives(plan: ClusterPlan, m: DissimilarityMatrix, p: int) -> list[list[int]]:
    """For ranks 1..p, the matrix index each cluster contributes.

    Members are ordered by cumulative dissimilarity within their cluster
    (ties by index); a cluster shorter than the rank repeats its last member.
    Rank 1 is the plan's own representatives.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    orders = []
    for c, rep in zip(plan.clusters, plan.representatives):
        ordered = sorted(c)
        sums = cumulative_dissimilarity(ordered, m)
        order = [ordered[i] for i in np.lexsort((np.asarray(ordered), sums))]
        order.remove(rep)
        orders.append([rep] + order)
    return [[o[min(r, len(o) - 1)] for o in orders] for r in range(p)]


def fault_tolerant_plans(plan: ClusterPlan, m: DissimilarityMatrix, trajs: Sequence[Trajectory],
                         p: int, assign: Callable[[Sequence[int]], Mapping[int, int]],
                         lifetime: Callable[[int, int], float]) -> list[HeadPlan]:
    """Rank ``p`` alternative head sets.

    ``assign(head_ids)`` maps every node to its head; ``lifetime(head, n)``
    returns the rounds a head can sustain while serving ``n`` messages per
    round. A plan's expected lifetime is the minimum over its heads.
    """
    plans = []
    for rank, picks in enumerate(ranked_representatives(plan, m, p), start=1):
        heads = sorted({nid for i in picks for nid in trajs[i].node_path})
        mapping = assign(heads)
        counts = {h: 0 for h in heads}
        for node, h in mapping.items():
            if node != h:
                counts[h] += 1
        life = min(lifetime(h, counts[h]) for h in heads)
        plans.append(HeadPlan(rank, tuple(heads), counts, int(life),
                              tuple(trajs[i].t_id for i in picks)))
    return plans
