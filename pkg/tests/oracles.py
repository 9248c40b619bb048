"""Reference implementations used only by the tests.

Energy oracles use exact rational arithmetic on the decimal constants;
graph and clustering oracles are brute force.
"""

from fractions import Fraction as F
from itertools import permutations
import math

E_TX = F("50e-9")
E_RX = F("50e-9")
E_DA = F("5e-9")
EPS1 = F("10e-12")
EPS2 = F("0.0013e-12")
PI = F(math.pi)


def tx(b, d):
    d = F(d)
    d0_sq = EPS1 / EPS2
    amp = EPS1 * d**2 if d * d < d0_sq else EPS2 * d**4
    return b * (E_TX + amp)


def head_round(b, n_over_m, d1):
    n_over_m = F(n_over_m)
    return b * E_TX * n_over_m + b * E_DA * n_over_m + b * EPS2 * F(d1) ** 4


def member_round(b, A, M):
    return b * E_TX + b * EPS1 * F(A) ** 2 / (2 * PI * M)


def total_round(b, N, M, A, d1):
    return b * (2 * E_TX * N + E_DA * N + M * EPS2 * F(d1) ** 4
                + (N - M) * EPS1 * F(A) ** 2 / (2 * PI * M))


def m_opt(N, A, d1):
    return A * math.sqrt(N / (2 * math.pi) * float(EPS1) / float(EPS2 * F(d1) ** 4 - E_TX))


def simple_path_costs(adj, source, target):
    """Costs of every simple path from ``source`` to ``target``."""
    others = [v for v in adj if v not in (source, target)]
    costs = []
    for r in range(len(others) + 1):
        for mid in permutations(others, r):
            path = (source,) + mid + (target,)
            if all(b in adj[a] for a, b in zip(path, path[1:])):
                costs.append(sum(adj[a][b] for a, b in zip(path, path[1:])))
    return costs


def medoid(cluster, d):
    """Member with the least summed dissimilarity; lowest index on ties."""
    best = None
    for i in sorted(cluster):
        s = sum(d[i][j] for j in cluster)
        if best is None or s < best[0]:
            best = (s, i)
    return best[1]
