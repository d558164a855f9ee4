"""Scenario types, validation and the hash-table placement decision."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import Infeasible, InvalidSpec
from .power import PowerModel


class Strategy(str, Enum):
    DUAL_SHUFFLE = "dual-shuffle"
    BROADCAST = "broadcast"


class CacheMode(str, Enum):
    COLD = "cold"
    WARM = "warm"


class ModeKind(str, Enum):
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"


@dataclass(frozen=True)
class NodeTypeSpec:
    name: str
    memory_mb: float
    cpu_bandwidth_mbps: float
    baseline_util: float
    power_model: PowerModel

    def power(self, utilization: float) -> float:
        return self.power_model(utilization)


@dataclass(frozen=True)
class NodeGroup:
    node: NodeTypeSpec
    count: int

    @property
    def name(self) -> str:
        return self.node.name


@dataclass(frozen=True)
class ClusterDesign:
    """Node groups plus the cluster-wide per-node disk (I) and NIC (L) rates."""

    node_groups: tuple[NodeGroup, ...]
    disk_bandwidth_mbps: float
    net_bandwidth_mbps: float

    def __post_init__(self):
        groups = tuple(
            g if isinstance(g, NodeGroup) else NodeGroup(*g) for g in self.node_groups
        )
        object.__setattr__(self, "node_groups", groups)

    @property
    def total_nodes(self) -> int:
        return sum(g.count for g in self.node_groups)

    @property
    def active_groups(self) -> tuple[NodeGroup, ...]:
        return tuple(g for g in self.node_groups if g.count > 0)

    def group(self, name: str) -> NodeGroup:
        for g in self.node_groups:
            if g.name == name:
                return g
        raise KeyError(name)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(g.count for g in self.node_groups)

    @property
    def label(self) -> str:
        return "".join(f"{g.count}{g.name[:1].upper()}" for g in self.node_groups)

    def with_counts(self, *counts: int) -> "ClusterDesign":
        if len(counts) != len(self.node_groups):
            raise ValueError("one count per node group")
        return ClusterDesign(
            tuple(NodeGroup(g.node, c) for g, c in zip(self.node_groups, counts)),
            self.disk_bandwidth_mbps,
            self.net_bandwidth_mbps,
        )


@dataclass(frozen=True)
class JoinQuerySpec:
    build_table_mb: float
    probe_table_mb: float
    build_sel: float
    probe_sel: float
    strategy: Strategy = Strategy.DUAL_SHUFFLE
    cache_mode: CacheMode = CacheMode.COLD
    hash_table_expansion: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "cache_mode", CacheMode(self.cache_mode))

    @property
    def hash_table_mb(self) -> float:
        return self.build_table_mb * self.build_sel * self.hash_table_expansion


@dataclass(frozen=True)
class ExecutionMode:
    kind: ModeKind
    builder_group: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        if self.kind is ModeKind.HOMOGENEOUS and self.builder_group is not None:
            raise InvalidSpec("builder_group", "homogeneous mode has no builder group")
        if self.kind is ModeKind.HETEROGENEOUS and not self.builder_group:
            raise InvalidSpec("builder_group", "heterogeneous mode needs a builder group")

    @property
    def is_homogeneous(self) -> bool:
        return self.kind is ModeKind.HOMOGENEOUS


HOMOGENEOUS = ExecutionMode(ModeKind.HOMOGENEOUS)


def _positive(value: float, name: str) -> None:
    if not (math.isfinite(value) and value > 0):
        raise InvalidSpec(name, f"must be > 0, got {value}")


def _fraction(value: float, name: str) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise InvalidSpec(name, f"must be in [0, 1], got {value}")


def validate_node(node: NodeTypeSpec) -> NodeTypeSpec:
    if not node.name:
        raise InvalidSpec("name", "node type needs a name")
    _positive(node.memory_mb, "memory_mb")
    _positive(node.cpu_bandwidth_mbps, "cpu_bandwidth_mbps")
    if not (math.isfinite(node.baseline_util) and 0.0 <= node.baseline_util < 1.0):
        raise InvalidSpec("baseline_util", f"must be in [0, 1), got {node.baseline_util}")
    return node


def validate_cluster(cluster: ClusterDesign) -> ClusterDesign:
    groups = cluster.node_groups
    if len(groups) > 2:
        raise InvalidSpec("node_groups", "at most two node groups are modelled")
    names = [g.name for g in groups]
    if len(set(names)) != len(names):
        raise InvalidSpec("node_groups", "duplicate node type names")
    for g in groups:
        validate_node(g.node)
        if not isinstance(g.count, int) or g.count < 0:
            raise InvalidSpec("count", f"{g.name}: must be a non-negative integer")
    if cluster.total_nodes < 1:
        raise InvalidSpec("node count", "cluster needs at least one node")
    _positive(cluster.disk_bandwidth_mbps, "disk_bandwidth_mbps")
    _positive(cluster.net_bandwidth_mbps, "net_bandwidth_mbps")
    return cluster


def validate_query(query: JoinQuerySpec) -> JoinQuerySpec:
    _positive(query.build_table_mb, "build_table_mb")
    _positive(query.probe_table_mb, "probe_table_mb")
    _fraction(query.build_sel, "build_sel")
    _fraction(query.probe_sel, "probe_sel")
    if not (math.isfinite(query.hash_table_expansion) and query.hash_table_expansion >= 1.0):
        raise InvalidSpec("hash_table_expansion", "must be >= 1")
    return query


def validate_scenario(
    cluster: ClusterDesign, query: JoinQuerySpec
) -> tuple[ClusterDesign, JoinQuerySpec]:
    return validate_cluster(cluster), validate_query(query)


def select_execution_mode(cluster: ClusterDesign, query: JoinQuerySpec) -> ExecutionMode:
    """Decide where hash tables live for a dual-shuffle join.

    Homogeneous when every populated group can hold its 1/N share of the hash
    table. Otherwise the group with the most memory builds alone (it must hold
    the whole table between its nodes) and the rest only scan and filter.
    """
    if query.strategy is not Strategy.DUAL_SHUFFLE:
        return broadcast_mode(cluster, query)
    groups = cluster.active_groups
    table = query.hash_table_mb
    per_node = table / cluster.total_nodes
    if all(g.node.memory_mb >= per_node for g in groups):
        return HOMOGENEOUS
    builder = max(groups, key=lambda g: g.node.memory_mb)
    if builder.node.memory_mb < table / builder.count:
        raise Infeasible(
            f"{builder.count} x {builder.name} ({builder.node.memory_mb:g} MB) "
            f"cannot hold a {table:g} MB hash table"
        )
    return ExecutionMode(ModeKind.HETEROGENEOUS, builder.name)


def broadcast_mode(cluster: ClusterDesign, query: JoinQuerySpec) -> ExecutionMode:
    """Every node keeps the full inner hash table, so every group must fit it."""
    table = query.hash_table_mb
    for g in cluster.active_groups:
        if g.node.memory_mb < table:
            raise Infeasible(
                f"broadcast needs {table:g} MB per node; {g.name} has {g.node.memory_mb:g}"
            )
    return HOMOGENEOUS
