"""First-order radio energy model and analytical cluster sizing.

Units are SI throughout: joules, bits, meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class NoOptimumError(ValueError):
    """Raised when the cluster-count derivative has no positive root."""


@dataclass(frozen=True)
class EnergyParams:
    E_Tx: float = 50e-9  # J/bit, transmit electronics
    E_Rx: float = 50e-9  # J/bit, receive electronics
    E_da: float = 5e-9  # J/bit per fused message
    eps1: float = 10e-12  # J/(bit m^2), free-space amplifier
    eps2: float = 0.0013e-12  # J/(bit m^4), two-ray amplifier

    def __post_init__(self):
        for name in ("E_Tx", "E_Rx", "E_da", "eps1", "eps2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def d0(self) -> float:
        """Crossover distance where the free-space and two-ray costs meet."""
        return math.sqrt(self.eps1 / self.eps2)


DEFAULT_PARAMS = EnergyParams()


def _check_bits(b):
    if not b > 0:
        raise ValueError(f"message size must be > 0 bits, got {b}")


def transmit_energy(b: float, d: float, params: EnergyParams = DEFAULT_PARAMS) -> float:
    """Energy to send ``b`` bits over ``d`` meters.

    Free-space (d^2) amplifier below the crossover distance, two-ray (d^4)
    at or above it. Electronics cost is charged in both regimes.
    """
    _check_bits(b)
    if d < 0:
        raise ValueError(f"distance must be >= 0, got {d}")
    if d < params.d0:
        return params.E_Tx * b + params.eps1 * d**2 * b
    return params.E_Tx * b + params.eps2 * d**4 * b


def receive_energy(b: float, params: EnergyParams = DEFAULT_PARAMS) -> float:
    _check_bits(b)
    return params.E_Rx * b


def aggregation_energy(b: float, k_messages: int, params: EnergyParams = DEFAULT_PARAMS) -> float:
    """Cost of fusing ``k_messages`` messages of ``b`` bits each."""
    _check_bits(b)
    if k_messages < 0:
        raise ValueError("k_messages must be >= 0")
    return params.E_da * b * k_messages


def head_round_energy(b: float, n_over_m: float, d1: float, params: EnergyParams = DEFAULT_PARAMS) -> float:
    """Per-frame cluster-head energy in the analytical model.

    Kept literal to the closed form used for sizing: electronics and fusion
    for ``n_over_m`` messages plus a bare two-ray uplink over ``d1``.
    The simulator charges complete per-action costs instead.
    """
    if n_over_m < 0 or d1 < 0:
        raise ValueError("n_over_m and d1 must be >= 0")
    return b * params.E_Tx * n_over_m + b * params.E_da * n_over_m + b * params.eps2 * d1**4


def expected_member_distance(A: float, M: float) -> float:
    """Mean member-to-head distance for M clusters in an A x A field."""
    if not A > 0 or M < 1:
        raise ValueError("need A > 0 and M >= 1")
    return math.sqrt(A**2 / (2 * math.pi * M))


def member_round_energy(b: float, A: float, M: float, params: EnergyParams = DEFAULT_PARAMS) -> float:
    if not A > 0 or M < 1:
        raise ValueError("need A > 0 and M >= 1")
    return b * params.E_Tx + b * params.eps1 * A**2 / (2 * math.pi * M)


def total_round_energy(b: float, N: float, M: float, A: float, d1: float,
                       params: EnergyParams = DEFAULT_PARAMS) -> float:
    """Energy dissipated by all M clusters in one frame (analytical form)."""
    if not N >= M >= 1:
        raise ValueError("need N >= M >= 1")
    return b * (
        2 * params.E_Tx * N
        + params.E_da * N
        + M * params.eps2 * d1**4
        + (N - M) * params.eps1 * A**2 / (2 * math.pi * M)
    )


def cluster_sum_energy(b: float, N: float, M: float, A: float, d1: float,
                       params: EnergyParams = DEFAULT_PARAMS) -> float:
    """M heads at :func:`head_round_energy` plus N - M members at
    :func:`member_round_energy`.

    This is the objective whose stationary point in M is
    :func:`optimal_cluster_count`; :func:`total_round_energy` differs from it
    by ``b * E_Tx * M`` and is minimised elsewhere.
    """
    if not N >= M >= 1:
        raise ValueError("need N >= M >= 1")
    return M * head_round_energy(b, N / M, d1, params) + (N - M) * member_round_energy(b, A, M, params)


def optimal_cluster_count(N: int, A: float, d1: float,
                          params: EnergyParams = DEFAULT_PARAMS) -> tuple[float, int]:
    """Stationary point in M of :func:`cluster_sum_energy`.

    Returns the real-valued stationary point and its integer rounding
    (half-up, clamped to ``[1, N]``). Raises :class:`NoOptimumError` when
    ``eps2 * d1**4 <= E_Tx``.
    """
    denom = params.eps2 * d1**4 - params.E_Tx
    if not denom > 0:
        raise NoOptimumError(
            f"eps2*d1^4 = {params.eps2 * d1**4:.4g} does not exceed E_Tx = {params.E_Tx:.4g}")
    m_real = A * math.sqrt(N / (2 * math.pi) * params.eps1 / denom)
    m_int = min(max(math.floor(m_real + 0.5), 1), N)
    return m_real, m_int
