"""Design-space sweeps, EDP ratios, knee location and recommendation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .domain import ClusterDesign, JoinQuerySpec, Strategy
from .errors import Infeasible, NoFeasibleDesign
from .model import Bottleneck, JoinEstimate, estimate

# relative slack for treating two energy ratios as equal, and for the floor
TIE_RTOL = 1e-9


class RelativeMetrics(NamedTuple):
    perf_ratio: float
    energy_ratio: float
    edp_ratio: float


@dataclass(frozen=True)
class DesignPoint:
    """A design evaluated against the reference; infeasible points keep NaNs."""

    design: ClusterDesign
    estimate: Optional[JoinEstimate]
    perf_ratio: float = math.nan
    energy_ratio: float = math.nan
    edp_ratio: float = math.nan
    infeasible_reason: str = ""
    strategy: Strategy = Strategy.DUAL_SHUFFLE

    @property
    def feasible(self) -> bool:
        return self.estimate is not None

    @property
    def below_edp_line(self) -> bool:
        return self.feasible and self.edp_ratio < 1.0


def relative_metrics(estimate: JoinEstimate, reference: JoinEstimate) -> RelativeMetrics:
    """Performance is 1/response time, so ``perf = T_ref / T``."""
    return ratios(estimate.total_s, estimate.total_j, reference.total_s, reference.total_j)


def ratios(total_s: float, total_j: float, ref_s: float, ref_j: float) -> RelativeMetrics:
    perf = ref_s / total_s
    energy = total_j / ref_j
    return RelativeMetrics(perf, energy, energy / perf)


def design_key(design: ClusterDesign) -> tuple[int, ...]:
    """Sort key: more of the first group first, i.e. 8B0W, 7B1W, ... 0B8W."""
    return tuple(-c for c in design.counts)


def sweep_designs(
    space: Iterable[ClusterDesign], query: JoinQuerySpec, reference: ClusterDesign
) -> list[DesignPoint]:
    """Evaluate every design against ``reference``; raises if the reference is infeasible."""
    ref = estimate(reference, query)
    points = []
    for design in space:
        try:
            est = estimate(design, query)
        except Infeasible as exc:
            points.append(
                DesignPoint(design, None, infeasible_reason=str(exc), strategy=query.strategy)
            )
            continue
        points.append(
            DesignPoint(design, est, *relative_metrics(est, ref), strategy=query.strategy)
        )
    points.sort(key=lambda p: design_key(p.design))
    return points


def mix_space(template: ClusterDesign, total: int) -> list[ClusterDesign]:
    """All two-group mixes with ``total`` nodes, from all-first to all-second."""
    if len(template.node_groups) != 2:
        raise ValueError("mixes need exactly two node groups")
    return [template.with_counts(total - k, k) for k in range(total + 1)]


def size_space(template: ClusterDesign, group: str, sizes: Iterable[int]) -> list[ClusterDesign]:
    """Homogeneous clusters of one node type at each size."""
    names = [g.name for g in template.node_groups]
    return [
        template.with_counts(*(s if name == group else 0 for name in names)) for s in sizes
    ]


def find_knee(points: Sequence[DesignPoint]) -> Optional[int]:
    """Index of the first point whose probe phase is builder-ingestion bound.

    ``points`` must be ordered by increasing count of scan-only nodes. Past
    the knee, adding such nodes only piles more traffic onto the builders'
    ingress links.
    """
    for i, p in enumerate(points):
        if p.feasible and p.estimate.probe.binding_bottleneck is Bottleneck.INGESTION:
            return i
    return None


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=TIE_RTOL, abs_tol=1e-15)


def recommend(points: Sequence[DesignPoint], perf_floor: float) -> DesignPoint:
    """Least-energy design meeting ``perf_floor``.

    Energy ties go to the faster design, then to the one with fewer nodes.
    """
    eligible = [
        p
        for p in points
        if p.feasible and (p.perf_ratio >= perf_floor or _close(p.perf_ratio, perf_floor))
    ]
    if not eligible:
        raise NoFeasibleDesign(f"no feasible design reaches performance {perf_floor:g}")
    best = eligible[0]
    for p in eligible[1:]:
        if _close(p.energy_ratio, best.energy_ratio):
            if _close(p.perf_ratio, best.perf_ratio):
                if p.design.total_nodes < best.design.total_nodes:
                    best = p
            elif p.perf_ratio > best.perf_ratio:
                best = p
        elif p.energy_ratio < best.energy_ratio:
            best = p
    return best


def pareto_front(points: Sequence[DesignPoint]) -> list[DesignPoint]:
    """Feasible points not dominated in (higher perf, lower energy)."""
    feasible = [p for p in points if p.feasible]
    front = []
    for p in feasible:
        dominated = any(
            q is not p
            and q.perf_ratio >= p.perf_ratio
            and q.energy_ratio <= p.energy_ratio
            and (q.perf_ratio > p.perf_ratio or q.energy_ratio < p.energy_ratio)
            for q in feasible
        )
        if not dominated:
            front.append(p)
    return front
