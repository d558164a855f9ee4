"""Line-oriented scenario files.

::

    # comments start with '#'
    [node beefy]
    memory_mb = 47000
    cpu_bandwidth_mbps = 5037
    baseline_util = 0.25
    power_model = power-law 130.03 0.2369

    [cluster]
    disk_bandwidth_mbps = 1200
    net_bandwidth_mbps = 100
    beefy = 8

    [query]                      # may repeat; jobs for ``simulate``
    build_table_mb = 700000
    probe_table_mb = 2800000
    build_sel = 0.1
    probe_sel = 0.01

    [sweep]                      # optional
    mix_total = 8                # all two-type mixes of 8 nodes
    size_node = beefy            # plus homogeneous clusters of these sizes
    sizes = 4, 5, 6, 7
    perf_floor = 0.6

    [reference]                  # optional, defaults to [cluster]
    beefy = 8
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .domain import (
    ClusterDesign,
    JoinQuerySpec,
    NodeGroup,
    NodeTypeSpec,
    validate_cluster,
    validate_node,
    validate_query,
)
from .errors import MissingSection, ParseError, UnknownKey
from .explorer import mix_space, size_space
from .power import PowerFamily, PowerModel

_SECTION = re.compile(r"^\[\s*([a-z]+)(?:\s+([A-Za-z0-9_.-]+))?\s*\]$")

NODE_KEYS = ("memory_mb", "cpu_bandwidth_mbps", "baseline_util", "power_model")
CLUSTER_KEYS = ("disk_bandwidth_mbps", "net_bandwidth_mbps")
QUERY_KEYS = (
    "build_table_mb",
    "probe_table_mb",
    "build_sel",
    "probe_sel",
    "strategy",
    "cache_mode",
    "hash_table_expansion",
)
QUERY_REQUIRED = QUERY_KEYS[:4]
SWEEP_KEYS = ("mix_total", "size_node", "sizes", "perf_floor")
RESERVED = set(NODE_KEYS + CLUSTER_KEYS + QUERY_KEYS + SWEEP_KEYS)


@dataclass(frozen=True)
class SweepAxis:
    mix_total: Optional[int] = None
    size_node: Optional[str] = None
    sizes: tuple[int, ...] = ()


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NodeTypeSpec, ...]
    cluster: ClusterDesign
    queries: tuple[JoinQuerySpec, ...]
    reference: ClusterDesign
    sweep: Optional[SweepAxis] = None
    perf_floor: Optional[float] = None

    @property
    def query(self) -> JoinQuerySpec:
        return self.queries[0]

    def designs(self) -> list[ClusterDesign]:
        """Sweep designs, de-duplicated; just the cluster when there is no sweep."""
        if self.sweep is None:
            return [self.cluster]
        out: list[ClusterDesign] = []
        if self.sweep.mix_total is not None:
            out.extend(mix_space(self.cluster, self.sweep.mix_total))
        if self.sweep.sizes:
            out.extend(size_space(self.cluster, self.sweep.size_node, self.sweep.sizes))
        seen, unique = set(), []
        for d in out:
            if d.counts not in seen:
                seen.add(d.counts)
                unique.append(d)
        return unique


@dataclass
class _Section:
    kind: str
    name: Optional[str]
    line: int
    items: dict[str, tuple[int, str]] = field(default_factory=dict)


def _sections(text: str) -> list[_Section]:
    sections: list[_Section] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            kind, name = m.group(1), m.group(2)
            if kind not in ("node", "cluster", "query", "sweep", "reference"):
                raise ParseError(lineno, f"unknown section [{kind}]")
            if (kind == "node") != (name is not None):
                raise ParseError(lineno, f"[{kind}] takes {'a' if kind == 'node' else 'no'} name")
            sections.append(_Section(kind, name, lineno))
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {line!r}")
        if not sections:
            raise ParseError(lineno, "key outside of any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in sections[-1].items:
            raise ParseError(lineno, f"duplicate key {key!r}")
        sections[-1].items[key] = (lineno, value)
    return sections


def _number(sec: _Section, key: str, kind=float):
    lineno, value = sec.items[key]
    try:
        return kind(value)
    except ValueError:
        raise ParseError(lineno, f"{key}: not a valid {kind.__name__}: {value!r}") from None


def _require(sec: _Section, keys) -> None:
    for key in keys:
        if key not in sec.items:
            raise ParseError(sec.line, f"[{sec.kind}] is missing {key!r}")


def _check_keys(sec: _Section, allowed) -> None:
    for key, (lineno, _) in sec.items.items():
        if key not in allowed:
            raise UnknownKey(lineno, f"unknown key {key!r} in [{sec.kind}]")


def _parse_node(sec: _Section) -> NodeTypeSpec:
    _check_keys(sec, NODE_KEYS)
    _require(sec, NODE_KEYS)
    if sec.name in RESERVED:
        raise ParseError(sec.line, f"node name {sec.name!r} is reserved")
    lineno, pm = sec.items["power_model"]
    parts = pm.split()
    try:
        model = PowerModel(PowerFamily(parts[0]), float(parts[1]), float(parts[2]))
        if len(parts) != 3:
            raise ValueError
    except (ValueError, IndexError):
        raise ParseError(lineno, f"power_model must be '<family> <a> <b>', got {pm!r}") from None
    node = NodeTypeSpec(
        sec.name,
        _number(sec, "memory_mb"),
        _number(sec, "cpu_bandwidth_mbps"),
        _number(sec, "baseline_util"),
        model,
    )
    return validate_node(node)


def _counts(sec: _Section, nodes: dict[str, NodeTypeSpec], extra=()) -> dict[str, int]:
    counts = {}
    for key in sec.items:
        if key in extra:
            continue
        if key not in nodes:
            raise UnknownKey(sec.items[key][0], f"{key!r} is not a defined node type")
        counts[key] = _number(sec, key, int)
    return counts


def _design(nodes, counts, disk, net) -> ClusterDesign:
    return ClusterDesign(
        tuple(NodeGroup(n, counts.get(name, 0)) for name, n in nodes.items()), disk, net
    )


def _parse_query(sec: _Section) -> JoinQuerySpec:
    _check_keys(sec, QUERY_KEYS)
    _require(sec, QUERY_REQUIRED)
    kwargs = {k: _number(sec, k) for k in QUERY_REQUIRED}
    if "hash_table_expansion" in sec.items:
        kwargs["hash_table_expansion"] = _number(sec, "hash_table_expansion")
    for key in ("strategy", "cache_mode"):
        if key in sec.items:
            kwargs[key] = sec.items[key][1]
    try:
        query = JoinQuerySpec(**kwargs)
    except ValueError as exc:
        raise ParseError(sec.line, str(exc)) from None
    return validate_query(query)


def parse_scenario(text: str) -> Scenario:
    sections = _sections(text)
    by_kind: dict[str, list[_Section]] = {}
    for sec in sections:
        by_kind.setdefault(sec.kind, []).append(sec)
    if "node" not in by_kind:
        raise MissingSection("node")
    nodes: dict[str, NodeTypeSpec] = {}
    for sec in by_kind["node"]:
        if sec.name in nodes:
            raise ParseError(sec.line, f"node type {sec.name!r} defined twice")
        nodes[sec.name] = _parse_node(sec)
    if len(nodes) > 2:
        raise ParseError(by_kind["node"][2].line, "at most two node types per scenario")

    for kind in ("cluster", "query"):
        if kind not in by_kind:
            raise MissingSection(kind)
    for kind in ("cluster", "sweep", "reference"):
        if len(by_kind.get(kind, ())) > 1:
            raise ParseError(by_kind[kind][1].line, f"[{kind}] may appear only once")

    csec = by_kind["cluster"][0]
    _require(csec, CLUSTER_KEYS)
    disk = _number(csec, "disk_bandwidth_mbps")
    net = _number(csec, "net_bandwidth_mbps")
    cluster = _design(nodes, _counts(csec, nodes, CLUSTER_KEYS), disk, net)

    queries = tuple(_parse_query(sec) for sec in by_kind["query"])

    sweep = None
    perf_floor = None
    if "sweep" in by_kind:
        ssec = by_kind["sweep"][0]
        _check_keys(ssec, SWEEP_KEYS)
        mix_total = _number(ssec, "mix_total", int) if "mix_total" in ssec.items else None
        sizes: tuple[int, ...] = ()
        size_node = None
        if "sizes" in ssec.items:
            lineno, raw = ssec.items["sizes"]
            try:
                sizes = tuple(int(s) for s in raw.split(","))
            except ValueError:
                raise ParseError(lineno, f"sizes must be integers, got {raw!r}") from None
            size_node = ssec.items.get("size_node", (0, next(iter(nodes))))[1]
            if size_node not in nodes:
                raise UnknownKey(ssec.items["size_node"][0], f"unknown node type {size_node!r}")
        elif "size_node" in ssec.items:
            raise ParseError(ssec.items["size_node"][0], "size_node needs sizes")
        if "perf_floor" in ssec.items:
            perf_floor = _number(ssec, "perf_floor")
        if mix_total is not None and len(nodes) != 2:
            raise ParseError(ssec.line, "mix_total needs exactly two node types")
        sweep = SweepAxis(mix_total, size_node, sizes)

    if "reference" in by_kind:
        reference = _design(nodes, _counts(by_kind["reference"][0], nodes), disk, net)
    else:
        reference = cluster
    validate_cluster(reference)
    return Scenario(tuple(nodes.values()), cluster, queries, reference, sweep, perf_floor)


def serialize_scenario(s: Scenario) -> str:
    """Inverse of :func:`parse_scenario`; floats are written with ``repr``."""
    out = []
    for node in s.nodes:
        pm = node.power_model
        out += [
            f"[node {node.name}]",
            f"memory_mb = {node.memory_mb!r}",
            f"cpu_bandwidth_mbps = {node.cpu_bandwidth_mbps!r}",
            f"baseline_util = {node.baseline_util!r}",
            f"power_model = {pm.family.value} {pm.coeff_a!r} {pm.coeff_b!r}",
            "",
        ]
    out += [
        "[cluster]",
        f"disk_bandwidth_mbps = {s.cluster.disk_bandwidth_mbps!r}",
        f"net_bandwidth_mbps = {s.cluster.net_bandwidth_mbps!r}",
    ]
    out += [f"{g.name} = {g.count}" for g in s.cluster.node_groups]
    out.append("")
    for q in s.queries:
        out += [
            "[query]",
            f"build_table_mb = {q.build_table_mb!r}",
            f"probe_table_mb = {q.probe_table_mb!r}",
            f"build_sel = {q.build_sel!r}",
            f"probe_sel = {q.probe_sel!r}",
            f"strategy = {q.strategy.value}",
            f"cache_mode = {q.cache_mode.value}",
            f"hash_table_expansion = {q.hash_table_expansion!r}",
            "",
        ]
    if s.sweep is not None:
        out.append("[sweep]")
        if s.sweep.mix_total is not None:
            out.append(f"mix_total = {s.sweep.mix_total}")
        if s.sweep.sizes:
            out.append(f"size_node = {s.sweep.size_node}")
            out.append("sizes = " + ", ".join(str(x) for x in s.sweep.sizes))
        if s.perf_floor is not None:
            out.append(f"perf_floor = {s.perf_floor!r}")
        out.append("")
    out.append("[reference]")
    out += [f"{g.name} = {g.count}" for g in s.reference.node_groups]
    return "\n".join(out) + "\n"


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def bundled(name: str) -> Scenario:
    """Load one of the scenario files shipped in ``clusterwatt/scenarios``."""
    text = resources.files("clusterwatt").joinpath("scenarios", name).read_text()
    return parse_scenario(text)
