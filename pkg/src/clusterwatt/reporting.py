"""Byte-stable text and CSV output."""

from __future__ import annotations

import csv
import io
import math
import os
from contextlib import contextmanager
from typing import IO, Iterator, Sequence, Union

from .domain import ClusterDesign
from .explorer import DesignPoint, design_key
from .model import JoinEstimate
from .power import FitReport

SIG_DIGITS_ENV = "CLUSTERWATT_SIG_DIGITS"
DEFAULT_SIG_DIGITS = 6

METRIC_COLUMNS = (
    "t_build_s",
    "t_probe_s",
    "t_total_s",
    "e_build_j",
    "e_probe_j",
    "e_total_j",
    "perf_ratio",
    "energy_ratio",
    "edp_ratio",
    "bottleneck_build",
    "bottleneck_probe",
)


def sig_digits() -> int:
    raw = os.environ.get(SIG_DIGITS_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_SIG_DIGITS
    digits = int(raw)
    if not 1 <= digits <= 17:
        raise ValueError(f"{SIG_DIGITS_ENV} must be between 1 and 17, got {digits}")
    return digits


def format_float(x: float, digits: int | None = None) -> str:
    """Fixed significant digits, trailing zeros kept so widths stay stable.

    ``-0`` prints as ``0`` and non-finite values print as ``nan``/``inf``.
    """
    if digits is None:
        digits = sig_digits()
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        x = 0.0
    text = f"{x:#.{digits}g}"
    return text[:-1] if text.endswith(".") else text


def points_header(group_names: Sequence[str]) -> list[str]:
    return [f"n_{g}" for g in group_names] + ["mode", "strategy", *METRIC_COLUMNS, "feasible"]


def _point_row(p: DesignPoint, digits: int) -> list[str]:
    counts = [str(c) for c in p.design.counts]
    if not p.feasible:
        return counts + ["", p.strategy.value] + [""] * len(METRIC_COLUMNS) + ["false"]
    est = p.estimate
    mode = est.mode.kind.value
    values = [
        est.build.duration_s,
        est.probe.duration_s,
        est.total_s,
        est.build.energy_j,
        est.probe.energy_j,
        est.total_j,
        p.perf_ratio,
        p.energy_ratio,
        p.edp_ratio,
    ]
    return (
        counts
        + [mode, est.strategy.value]
        + [format_float(v, digits) for v in values]
        + [est.build.binding_bottleneck.value, est.probe.binding_bottleneck.value, "true"]
    )


@contextmanager
def _open_dest(dest: Union[str, os.PathLike, IO[str]]) -> Iterator[IO[str]]:
    if hasattr(dest, "write"):
        yield dest
    else:
        # newline="" so the csv module's "\n" is written as-is on every platform
        with open(dest, "w", newline="") as fh:
            yield fh


def write_points_csv(
    points: Sequence[DesignPoint], dest: Union[str, os.PathLike, IO[str]], digits: int | None = None
) -> None:
    if not points:
        raise ValueError("no design points to write")
    digits = sig_digits() if digits is None else digits
    names = [g.name for g in points[0].design.node_groups]
    ordered = sorted(points, key=lambda p: design_key(p.design))
    with _open_dest(dest) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(points_header(names))
        for p in ordered:
            writer.writerow(_point_row(p, digits))


def points_csv(points: Sequence[DesignPoint], digits: int | None = None) -> str:
    buf = io.StringIO()
    write_points_csv(points, buf, digits)
    return buf.getvalue()


def format_estimate(
    est: JoinEstimate, cluster: ClusterDesign | None = None, digits: int | None = None
) -> str:
    """Human-readable estimate; with ``cluster``, empty node groups are skipped."""
    shown = None if cluster is None else {g.name for g in cluster.active_groups}
    f = lambda x: format_float(x, digits)  # noqa: E731
    mode = est.mode.kind.value
    if est.mode.builder_group:
        mode += f" (builders: {est.mode.builder_group})"
    lines = [f"mode: {mode}", f"strategy: {est.strategy.value}"]
    for ph in est.phases:
        lines.append(
            f"{ph.phase.value}: {f(ph.duration_s)} s, {f(ph.energy_j)} J, "
            f"bound by {ph.binding_bottleneck.value}"
        )
        for name in sorted(ph.per_group_rate_mbps):
            if shown is not None and name not in shown:
                continue
            lines.append(
                f"  {name}: rate {f(ph.per_group_rate_mbps[name])} MB/s, "
                f"cpu {f(ph.per_group_cpu_mbps[name])} MB/s, "
                f"power {f(ph.per_group_power_w[name])} W"
            )
    lines.append(f"total: {f(est.total_s)} s, {f(est.total_j)} J")
    return "\n".join(lines) + "\n"


def format_fit_report(report: FitReport, digits: int | None = None) -> str:
    f = lambda x: format_float(x, digits)  # noqa: E731
    chosen = report.chosen
    lines = [
        f"family: {chosen.family.value}",
        f"a: {f(chosen.coeff_a)}",
        f"b: {f(chosen.coeff_b)}",
        f"r_squared: {f(report.r_squared)}",
    ]
    for family, r2 in report.r_squared_by_family.items():
        lines.append(f"  {family.value}: r_squared {f(r2)}")
    return "\n".join(lines) + "\n"
