"""Sensor-field types, configuration and random deployment."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np

#: Identifier recorded in run metadata so traces can be reproduced elsewhere.
RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


class Role(enum.Enum):
    MEMBER = "member"
    CLUSTER_HEAD = "cluster_head"


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: Position) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass
class SensorNode:
    id: int
    position: Position
    residual_energy: float
    alive: bool = True
    role: Role = Role.MEMBER


@dataclass
class NetworkConfig:
    """Simulation parameters. Defaults reproduce the 100-node, 2 J setup.

    ``base_station`` of ``None`` places the sink at ``(A/2, A + 90)``.
    ``bs_range`` of ``None`` lets the sink hear every node within ``r0`` of
    the closest node's distance to it (see :mod:`fttc.routing`).
    ``n_clusters`` of 0 sizes clusters analytically each epoch;
    ``fallback_clusters`` is used when no analytical optimum exists.
    """

    n_nodes: int = 100
    field_side: float = 100.0
    base_station: Position | None = None
    comm_range: float = 25.0
    bs_range: float | None = None
    initial_energy: float = 2.0
    message_bits: int = 516 * 8
    recluster_period: float = 20
    ft_depth: int = 4
    rotation: bool = True
    n_clusters: int = 0
    fallback_clusters: int = 7
    rng_seed: int = 0
    max_rounds: int = 10_000

    def __post_init__(self):
        if self.base_station is None:
            self.base_station = Position(self.field_side / 2, self.field_side + 90.0)

    @property
    def bs_distance(self) -> float:
        """Distance from the sink to the nearest point of the field square."""
        bs = self.base_station
        A = self.field_side
        dx = max(0.0, -bs.x, bs.x - A)
        dy = max(0.0, -bs.y, bs.y - A)
        return math.hypot(dx, dy)

    def replace(self, **changes) -> NetworkConfig:
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return NetworkConfig(**values)


@dataclass
class ConfigError:
    field: str
    message: str

    def __str__(self):
        return f"{self.field}: {self.message}"


def _finite(v) -> bool:
    try:
        return math.isfinite(v)
    except TypeError:
        return False


def validate_config(config: NetworkConfig) -> list[ConfigError]:
    """Return every violated constraint; an empty list means valid."""
    errors = []

    def check(ok, name, message):
        if not ok:
            errors.append(ConfigError(name, message))

    def is_int(v):
        return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

    check(is_int(config.n_nodes) and config.n_nodes >= 1, "n_nodes", "n_nodes ≥ 1")
    check(_finite(config.field_side) and config.field_side > 0, "field_side", "field_side > 0")
    check(_finite(config.comm_range) and config.comm_range > 0, "comm_range", "comm_range > 0")
    check(config.bs_range is None or (_finite(config.bs_range) and config.bs_range > 0),
          "bs_range", "bs_range > 0")
    check(_finite(config.initial_energy) and config.initial_energy > 0,
          "initial_energy", "initial_energy > 0")
    check(is_int(config.message_bits) and config.message_bits > 0, "message_bits", "message_bits > 0")
    check(config.recluster_period == math.inf or (is_int(config.recluster_period) and config.recluster_period >= 1),
          "recluster_period", "recluster_period ≥ 1 or inf")
    check(is_int(config.ft_depth) and config.ft_depth >= 1, "ft_depth", "ft_depth ≥ 1")
    check(is_int(config.n_clusters) and config.n_clusters >= 0, "n_clusters", "n_clusters ≥ 0")
    check(is_int(config.fallback_clusters) and config.fallback_clusters >= 1,
          "fallback_clusters", "fallback_clusters ≥ 1")
    check(is_int(config.rng_seed) and 0 <= config.rng_seed < 2**64, "rng_seed", "rng_seed in [0, 2^64)")
    check(is_int(config.max_rounds) and config.max_rounds >= 0, "max_rounds", "max_rounds ≥ 0")
    bs = config.base_station
    check(isinstance(bs, Position) and _finite(bs.x) and _finite(bs.y),
          "base_station", "base_station must have finite coordinates")
    return errors


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def deploy(config: NetworkConfig, rng: np.random.Generator) -> list[SensorNode]:
    """Place ``n_nodes`` nodes uniformly at random over the square field.

    A draw landing exactly on the base station is redrawn.
    """
    errors = validate_config(config)
    if errors:
        raise ValueError("invalid config: " + "; ".join(map(str, errors)))
    A = config.field_side
    bs = config.base_station
    nodes = []
    for i in range(config.n_nodes):
        while True:
            x, y = rng.uniform(0.0, A, size=2)
            if (x, y) != (bs.x, bs.y):
                break
        nodes.append(SensorNode(i, Position(float(x), float(y)), config.initial_energy))
    return nodes
