"""Closed-form time and energy of a two-phase parallel hash join.

Each phase (build, then probe) scans a table partitioned evenly over all
nodes, filters it, and ships the qualifying bytes to whichever nodes hold the
hash tables. Throughput is set by whichever of disk scan, NIC egress or NIC
ingress saturates first; CPU bandwidth only feeds the power estimate in cold
mode. In warm mode the scan runs at CPU speed and shipping happens afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, NamedTuple, Sequence

from .domain import (
    CacheMode,
    ClusterDesign,
    ExecutionMode,
    JoinQuerySpec,
    ModeKind,
    NodeGroup,
    Strategy,
    broadcast_mode,
    select_execution_mode,
    validate_scenario,
)


class Bottleneck(str, Enum):
    DISK = "disk"
    NETWORK = "network-exchange"
    INGESTION = "beefy-ingestion"
    CPU = "cpu"
    CPU_NETWORK = "cpu-plus-network"


class Phase(str, Enum):
    BUILD = "build"
    PROBE = "probe"


@dataclass(frozen=True)
class PhaseEstimate:
    phase: Phase
    duration_s: float
    per_group_rate_mbps: Mapping[str, float]
    per_group_cpu_mbps: Mapping[str, float]
    per_group_power_w: Mapping[str, float]
    energy_j: float
    binding_bottleneck: Bottleneck
    network_mb: float = 0.0


@dataclass(frozen=True)
class JoinEstimate:
    build: PhaseEstimate
    probe: PhaseEstimate
    mode: ExecutionMode
    strategy: Strategy

    @property
    def total_s(self) -> float:
        return self.build.duration_s + self.probe.duration_s

    @property
    def total_j(self) -> float:
        return self.build.energy_j + self.probe.energy_j

    @property
    def phases(self) -> tuple[PhaseEstimate, PhaseEstimate]:
        return self.build, self.probe


class HomogeneousPhase(NamedTuple):
    rate_mbps: float
    cpu_mbps: float
    duration_s: float
    bottleneck: Bottleneck


def homogeneous_phase(
    n_total: int, table_mb: float, sel: float, disk_mbps: float, net_mbps: float
) -> HomogeneousPhase:
    """Per-node rates when every node builds and probes its own partition.

    Disk-bound while a node's qualified output ``I*sel`` is below the link
    rate, otherwise each node drains at ``nL/(n-1)`` qualified MB/s.
    """
    if n_total == 1 or disk_mbps * sel < net_mbps:
        return HomogeneousPhase(
            disk_mbps * sel, disk_mbps, (table_mb / n_total) / disk_mbps, Bottleneck.DISK
        )
    rate = n_total * net_mbps / (n_total - 1)
    return HomogeneousPhase(
        rate, rate / sel, table_mb * sel / (n_total * rate), Bottleneck.NETWORK
    )


# (seconds, raw cpu MB/s) stretches during which a node is processing; the
# rest of the phase it sits at its baseline utilization.
Legs = Sequence[tuple[float, float]]


def _group_power(group: NodeGroup, duration: float, legs: Legs) -> float:
    node = group.node
    if len(legs) == 1 and legs[0][0] >= duration:
        return node.power(node.baseline_util + legs[0][1] / node.cpu_bandwidth_mbps)
    if duration <= 0.0:
        return node.power(node.baseline_util)
    busy = 0.0
    joules = 0.0
    for seconds, cpu in legs:
        busy += seconds
        joules += seconds * node.power(node.baseline_util + cpu / node.cpu_bandwidth_mbps)
    joules += max(0.0, duration - busy) * node.power(node.baseline_util)
    return joules / duration


def _assemble(
    phase: Phase,
    cluster: ClusterDesign,
    duration: float,
    rates: Mapping[str, float],
    cpu: Mapping[str, float],
    legs: Mapping[str, Legs],
    bottleneck: Bottleneck,
    network_mb: float,
) -> PhaseEstimate:
    power = {g.name: _group_power(g, duration, legs[g.name]) for g in cluster.node_groups}
    energy = duration * sum(g.count * power[g.name] for g in cluster.node_groups)
    return PhaseEstimate(
        phase, duration, dict(rates), dict(cpu), power, energy, bottleneck, network_mb
    )


def _uniform(cluster: ClusterDesign, value):
    return {g.name: value for g in cluster.node_groups}


def _warm_phase(
    phase: Phase,
    cluster: ClusterDesign,
    table_mb: float,
    sel: float,
    sent_mb: Mapping[str, float],
    floor_s: float = 0.0,
    floor_bottleneck: Bottleneck = Bottleneck.INGESTION,
    network_mb: float = 0.0,
) -> PhaseEstimate:
    """CPU pass over the local partition at full speed, then ship ``sent_mb``."""
    n = cluster.total_nodes
    link = cluster.net_bandwidth_mbps
    local = table_mb / n
    legs, cpu, rates = {}, {}, {}
    finish = 0.0
    for g in cluster.node_groups:
        c = g.node.cpu_bandwidth_mbps
        t_cpu = local / c
        legs[g.name] = [(t_cpu, c)]
        cpu[g.name] = c
        rates[g.name] = c * sel
        if g.count:
            finish = max(finish, t_cpu + sent_mb[g.name] / link)
    shipped = any(sent_mb[g.name] > 0 for g in cluster.active_groups)
    bottleneck = Bottleneck.CPU_NETWORK if shipped else Bottleneck.CPU
    if floor_s > finish:
        finish, bottleneck = floor_s, floor_bottleneck
    return _assemble(phase, cluster, finish, rates, cpu, legs, bottleneck, network_mb)


def _hetero_ship_finish(
    n_b: int, n_s: int, builder: tuple[float, float], scanner: tuple[float, float], link: float
) -> float:
    """When the last qualified byte reaches a builder in warm heterogeneous mode.

    ``builder`` and ``scanner`` are (cpu_done_s, mb_to_ship) per node of each
    class. Every sender in an active class ships at a common max-min fair rate:
    capped by its own egress ``L`` and, jointly, by each builder's ingress
    (a builder hears ``y_b`` from its peers and ``y_s * n_s / n_b`` from
    scanners).
    """
    release = {"b": builder[0], "s": scanner[0]}
    left = {"b": builder[1] if n_b > 1 else 0.0, "s": scanner[1] if n_s else 0.0}
    weight = {"b": 1.0, "s": n_s / n_b}
    t = min(release[k] for k in left if left[k] > 0) if any(left.values()) else 0.0
    while any(v > 0 for v in left.values()):
        active = [k for k in left if left[k] > 0 and release[k] <= t]
        pending = [release[k] for k in left if left[k] > 0 and release[k] > t]
        if not active:
            t = min(pending)
            continue
        rate = min(link, link / sum(weight[k] for k in active))
        step = min(left[k] / rate for k in active)
        if pending:
            step = min(step, min(pending) - t)
        t += step
        for k in active:
            left[k] = 0.0 if left[k] <= rate * step * (1 + 1e-12) else left[k] - rate * step
    return t


def _dual_shuffle_phase(
    phase: Phase,
    cluster: ClusterDesign,
    mode: ExecutionMode,
    table_mb: float,
    sel: float,
    cache: CacheMode,
) -> PhaseEstimate:
    n = cluster.total_nodes
    disk, link = cluster.disk_bandwidth_mbps, cluster.net_bandwidth_mbps
    qual = table_mb * sel / n
    network_mb = table_mb * sel * (n - 1) / n

    if mode.is_homogeneous:
        if cache is CacheMode.WARM:
            sent = qual * (n - 1) / n
            return _warm_phase(
                phase, cluster, table_mb, sel, _uniform(cluster, sent), network_mb=network_mb
            )
        hp = homogeneous_phase(n, table_mb, sel, disk, link)
        return _assemble(
            phase,
            cluster,
            hp.duration_s,
            _uniform(cluster, hp.rate_mbps),
            _uniform(cluster, hp.cpu_mbps),
            _uniform(cluster, [(hp.duration_s, hp.cpu_mbps)]),
            hp.bottleneck,
            network_mb,
        )

    builders = cluster.group(mode.builder_group)
    n_b = builders.count
    n_s = n - n_b
    if cache is CacheMode.WARM:
        sent = {
            g.name: qual * (n_b - 1) / n_b if g.name == builders.name else qual
            for g in cluster.node_groups
        }
        scanners = next(g for g in cluster.node_groups if g.name != builders.name)
        local = table_mb / n
        ship_done = _hetero_ship_finish(
            n_b,
            n_s,
            (local / builders.node.cpu_bandwidth_mbps, sent[builders.name]),
            (local / scanners.node.cpu_bandwidth_mbps, sent[scanners.name]),
            link,
        )
        return _warm_phase(
            phase,
            cluster,
            table_mb,
            sel,
            sent,
            floor_s=ship_done,
            network_mb=network_mb,
        )

    t_scan = (table_mb / n) / disk
    t_ingest = network_mb / (n_b * link)
    t_send = qual / link
    duration = max(t_scan, t_ingest, t_send)
    bottleneck = Bottleneck.INGESTION if duration > t_scan else Bottleneck.DISK
    u = (table_mb / n) / duration
    cpu = _uniform(cluster, u)
    legs = _uniform(cluster, [(duration, u)])
    if n_b == 1:
        # a lone builder's own partition never crosses an ingress link
        cpu[builders.name] = disk
        legs[builders.name] = [(t_scan, disk)]
    rates = {name: c * sel for name, c in cpu.items()}
    return _assemble(phase, cluster, duration, rates, cpu, legs, bottleneck, network_mb)


def estimate_dual_shuffle(cluster: ClusterDesign, query: JoinQuerySpec) -> JoinEstimate:
    """Repartition both tables on the join key; raises ``Infeasible``."""
    validate_scenario(cluster, query)
    mode = select_execution_mode(cluster, query)
    build = _dual_shuffle_phase(
        Phase.BUILD, cluster, mode, query.build_table_mb, query.build_sel, query.cache_mode
    )
    probe = _dual_shuffle_phase(
        Phase.PROBE, cluster, mode, query.probe_table_mb, query.probe_sel, query.cache_mode
    )
    return JoinEstimate(build, probe, mode, Strategy.DUAL_SHUFFLE)


def broadcast_received_mb(n_total: int, qualified_mb: float) -> float:
    """Inner-table bytes each node must pull off the network: m(n-1)/n."""
    return qualified_mb * (n_total - 1) / n_total


def estimate_broadcast(cluster: ClusterDesign, query: JoinQuerySpec) -> JoinEstimate:
    """Ship the filtered inner table to every node; the outer table stays put."""
    validate_scenario(cluster, query)
    mode = broadcast_mode(cluster, query)
    n = cluster.total_nodes
    disk, link = cluster.disk_bandwidth_mbps, cluster.net_bandwidth_mbps
    bld, sel = query.build_table_mb, query.build_sel
    received = broadcast_received_mb(n, bld * sel)

    if query.cache_mode is CacheMode.WARM:
        build = _warm_phase(
            Phase.BUILD, cluster, bld, sel, _uniform(cluster, received),
            network_mb=n * received,
        )
        probe = _warm_phase(
            Phase.PROBE, cluster, query.probe_table_mb, query.probe_sel, _uniform(cluster, 0.0)
        )
        return JoinEstimate(build, probe, mode, Strategy.BROADCAST)

    t_scan = (bld / n) / disk
    t_net = received / link
    t_build = max(t_scan, t_net)
    u = (bld / n) / t_build
    build = _assemble(
        Phase.BUILD,
        cluster,
        t_build,
        _uniform(cluster, u * sel),
        _uniform(cluster, u),
        _uniform(cluster, [(t_build, u)]),
        Bottleneck.NETWORK if t_net > t_scan else Bottleneck.DISK,
        n * received,
    )
    t_probe = (query.probe_table_mb / n) / disk
    probe = _assemble(
        Phase.PROBE,
        cluster,
        t_probe,
        _uniform(cluster, disk * query.probe_sel),
        _uniform(cluster, disk),
        _uniform(cluster, [(t_probe, disk)]),
        Bottleneck.DISK,
        0.0,
    )
    return JoinEstimate(build, probe, mode, Strategy.BROADCAST)


def broadcast_network_time(n_total: int, query: JoinQuerySpec, net_mbps: float) -> float:
    return broadcast_received_mb(n_total, query.build_table_mb * query.build_sel) / net_mbps


def estimate(cluster: ClusterDesign, query: JoinQuerySpec) -> JoinEstimate:
    if query.strategy is Strategy.BROADCAST:
        return estimate_broadcast(cluster, query)
    return estimate_dual_shuffle(cluster, query)


__all__ = [
    "Bottleneck",
    "HomogeneousPhase",
    "JoinEstimate",
    "ModeKind",
    "Phase",
    "PhaseEstimate",
    "broadcast_network_time",
    "broadcast_received_mb",
    "estimate",
    "estimate_broadcast",
    "estimate_dual_shuffle",
    "homogeneous_phase",
]
