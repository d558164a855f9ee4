"""Deterministic fluid simulation of concurrent hash joins on a cluster.

Every node's share of a join phase is a flow (or, in warm mode, a CPU flow
followed by a network flow). Flows consume per-node resources: disk scan
bandwidth, CPU (warm mode only), NIC egress and NIC ingress. Rates are
max-min fair by progressive filling and stay constant until the next flow
finishes, so the run is an exact sequence of piecewise-constant segments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, Hashable, Mapping, Sequence

from .domain import (
    CacheMode,
    ClusterDesign,
    JoinQuerySpec,
    NodeTypeSpec,
    Strategy,
    select_execution_mode,
    validate_scenario,
)
from .errors import NoProgress
from .model import Phase
from .reporting import format_float

Resource = tuple[str, int]

_DONE_EPS = 1e-9
_SATURATION_EPS = 1e-12


def max_min_rates(
    flows: Sequence[Mapping[Hashable, float]], capacity: Mapping[Hashable, float]
) -> list[float]:
    """Max-min fair rates for flows with per-resource usage coefficients.

    ``flows[k][r]`` is how much of resource ``r`` one unit of flow ``k`` uses.
    All unfrozen flows grow together; when a resource fills, every flow
    touching it freezes.
    """
    rates = [0.0] * len(flows)
    residual = dict(capacity)
    unfrozen = [k for k, f in enumerate(flows) if any(c > 0 for c in f.values())]
    if len(unfrozen) != len(flows):
        raise NoProgress("a flow uses no capacity-limited resource")
    while unfrozen:
        load: dict[Hashable, float] = {}
        for k in unfrozen:
            for r, c in flows[k].items():
                if c > 0:
                    load[r] = load.get(r, 0.0) + c
        step = min(residual[r] / l for r, l in load.items())
        saturated = set()
        for r, l in load.items():
            residual[r] -= step * l
            if residual[r] <= _SATURATION_EPS * capacity[r]:
                residual[r] = 0.0
                saturated.add(r)
        for k in unfrozen:
            rates[k] += step
        unfrozen = [
            k for k in unfrozen if not any(c > 0 and r in saturated for r, c in flows[k].items())
        ]
    return rates


@dataclass
class _Stage:
    remaining: float
    coeffs: dict[Resource, float]
    cpu_per_unit: float
    delivered_per_unit: float
    initial: float = 0.0

    def __post_init__(self):
        self.initial = self.remaining


@dataclass(frozen=True)
class JobResult:
    completion_s: float
    energy_j: float
    phase_durations_s: tuple[float, float]
    delivered_mb: tuple[float, float]


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    cpu_util: tuple[float, ...]
    watts: tuple[float, ...]


@dataclass(frozen=True)
class SimResult:
    per_job: tuple[JobResult, ...]
    cluster_energy_j: float
    makespan_s: float
    node_names: tuple[str, ...]
    utilization_trace: tuple[Segment, ...] = field(repr=False)

    def mean_utilization(self, node: int) -> float:
        if self.makespan_s == 0:
            return 0.0
        return (
            sum((s.end_s - s.start_s) * s.cpu_util[node] for s in self.utilization_trace)
            / self.makespan_s
        )


def _destinations(
    cluster: ClusterDesign, nodes: Sequence[NodeTypeSpec], query: JoinQuerySpec, phase: Phase
) -> dict[int, float]:
    """Fraction of a node's qualified output bound for each node (self included)."""
    n = len(nodes)
    if query.strategy is Strategy.BROADCAST:
        # broadcast probes stay local
        return {} if phase is Phase.PROBE else {j: 1.0 for j in range(n)}
    mode = select_execution_mode(cluster, query)
    if mode.is_homogeneous:
        return {j: 1.0 / n for j in range(n)}
    builders = [j for j, node in enumerate(nodes) if node.name == mode.builder_group]
    return {j: 1.0 / len(builders) for j in builders}


def _phase_stages(
    cluster: ClusterDesign, nodes: Sequence[NodeTypeSpec], query: JoinQuerySpec, phase: Phase
) -> list[list[_Stage]]:
    n = len(nodes)
    table = query.build_table_mb if phase is Phase.BUILD else query.probe_table_mb
    sel = query.build_sel if phase is Phase.BUILD else query.probe_sel
    dests = _destinations(cluster, nodes, query, phase)
    warm = query.cache_mode is CacheMode.WARM
    local = table / n
    per_node = []
    for i in range(n):
        remote = {j: f for j, f in dests.items() if j != i and f > 0}
        remote_frac = sum(remote.values())
        stages = []
        if warm:
            stages.append(_Stage(local, {("cpu", i): 1.0}, 1.0, 0.0))
            shipped = local * sel * remote_frac
            if shipped > 0:
                coeffs = {("out", i): 1.0}
                coeffs.update({("in", j): f / remote_frac for j, f in remote.items()})
                stages.append(_Stage(shipped, coeffs, 0.0, 1.0))
        else:
            coeffs = {("disk", i): 1.0}
            if sel > 0 and remote_frac > 0:
                coeffs[("out", i)] = sel * remote_frac
                coeffs.update({("in", j): sel * f for j, f in remote.items()})
            stages.append(_Stage(local, coeffs, 1.0, sel * remote_frac))
        per_node.append(stages)
    return per_node


@dataclass
class _JobState:
    query: JoinQuerySpec
    phase_index: int = 0
    stages: list[list[_Stage]] = field(default_factory=list)
    phase_start: float = 0.0
    durations: list[float] = field(default_factory=list)
    delivered: list[float] = field(default_factory=lambda: [0.0, 0.0])
    energy: float = 0.0
    completion: float | None = None


def simulate(cluster: ClusterDesign, jobs: Sequence[JoinQuerySpec]) -> SimResult:
    """Run all ``jobs`` from t=0 to completion on ``cluster``.

    Nodes draw power at ``clamp(k*G + cpu_rate/C)`` where ``k`` is the number
    of joins still running: each running join carries the engine's baseline
    CPU load. Per-job energy splits each segment evenly over running joins.
    """
    nodes: list[NodeTypeSpec] = []
    names: list[str] = []
    for g in cluster.node_groups:
        for k in range(g.count):
            nodes.append(g.node)
            names.append(f"{g.name}{k}")
    for q in jobs:
        validate_scenario(cluster, q)
        select_execution_mode(cluster, q)

    capacity: dict[Resource, float] = {}
    for i, node in enumerate(nodes):
        capacity[("disk", i)] = cluster.disk_bandwidth_mbps
        capacity[("cpu", i)] = node.cpu_bandwidth_mbps
        capacity[("out", i)] = cluster.net_bandwidth_mbps
        capacity[("in", i)] = cluster.net_bandwidth_mbps

    phases = (Phase.BUILD, Phase.PROBE)
    states = [
        _JobState(q, stages=_phase_stages(cluster, nodes, q, Phase.BUILD)) for q in jobs
    ]
    now = 0.0
    total_energy = 0.0
    trace: list[Segment] = []

    while True:
        running = [s for s in states if s.completion is None]
        if not running:
            break
        active: list[tuple[_JobState, int, _Stage]] = [
            (s, i, st[0]) for s in running for i, st in enumerate(s.stages) if st
        ]
        rates = max_min_rates([a[2].coeffs for a in active], capacity)
        dt = math.inf
        for (_, _, stage), rate in zip(active, rates):
            if rate <= 0.0:
                raise NoProgress(f"flow with {stage.remaining} MB left has zero rate")
            dt = min(dt, stage.remaining / rate)

        cpu_rate = [0.0] * len(nodes)
        for (_, i, stage), rate in zip(active, rates):
            cpu_rate[i] += stage.cpu_per_unit * rate
        utils = tuple(
            min(1.0, len(running) * node.baseline_util + cpu_rate[i] / node.cpu_bandwidth_mbps)
            for i, node in enumerate(nodes)
        )
        watts = tuple(node.power(u) for node, u in zip(nodes, utils))
        seg_energy = dt * sum(watts)
        total_energy += seg_energy
        trace.append(Segment(now, now + dt, utils, watts))
        for s in running:
            s.energy += seg_energy / len(running)
        now += dt

        for (s, i, stage), rate in zip(active, rates):
            moved = rate * dt
            s.delivered[s.phase_index] += moved * stage.delivered_per_unit
            stage.remaining -= moved
        for s, i, stage in active:
            if stage.remaining <= _DONE_EPS * stage.initial:
                s.stages[i].pop(0)
        for s in running:
            if any(s.stages):
                continue
            s.durations.append(now - s.phase_start)
            s.phase_index += 1
            s.phase_start = now
            if s.phase_index == len(phases):
                s.completion = now
            else:
                s.stages = _phase_stages(cluster, nodes, s.query, phases[s.phase_index])

    per_job = tuple(
        JobResult(s.completion, s.energy, tuple(s.durations), tuple(s.delivered))
        for s in states
    )
    return SimResult(per_job, total_energy, now, tuple(names), tuple(trace))


def write_trace_csv(result: SimResult, fh: IO[str], digits: int | None = None) -> None:
    """One row per node per segment, stamped at the segment start: time_s,node,cpu_util,watts."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["time_s", "node", "cpu_util", "watts"])
    for seg in result.utilization_trace:
        for name, util, w in zip(result.node_names, seg.cpu_util, seg.watts):
            writer.writerow(
                [
                    format_float(seg.start_s, digits),
                    name,
                    format_float(util, digits),
                    format_float(w, digits),
                ]
            )
