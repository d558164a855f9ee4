"""``clusterwatt`` command line.

Exit status: 0 on success, 2 when a design or floor cannot be satisfied,
1 for malformed input and I/O failures.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import explorer, model, reporting, simulator
from .errors import Infeasible, InsufficientData, InvalidSpec, NoFeasibleDesign, ParseError
from .power import fit_power_model, read_samples_csv
from .scenario import load_scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSATISFIABLE = 2


def _calibrate(args) -> int:
    report = fit_power_model(read_samples_csv(args.samples))
    sys.stdout.write(reporting.format_fit_report(report))
    return EXIT_OK


def _estimate(args) -> int:
    scn = load_scenario(args.scenario)
    est = model.estimate(scn.cluster, scn.query)
    sys.stdout.write(reporting.format_estimate(est, scn.cluster))
    return EXIT_OK


def _sweep_points(scn):
    return explorer.sweep_designs(scn.designs(), scn.query, scn.reference)


def _sweep(args) -> int:
    points = _sweep_points(load_scenario(args.scenario))
    reporting.write_points_csv(points, args.out if args.out else sys.stdout)
    return EXIT_OK


def _simulate(args) -> int:
    scn = load_scenario(args.scenario)
    if args.concurrency < 1:
        raise InvalidSpec("concurrency", "must be >= 1")
    jobs = list(scn.queries) * args.concurrency
    result = simulator.simulate(scn.cluster, jobs)
    f = reporting.format_float
    out = sys.stdout
    out.write("job,completion_s,t_build_s,t_probe_s,energy_j\n")
    for k, job in enumerate(result.per_job):
        t_build, t_probe = job.phase_durations_s
        out.write(
            f"{k},{f(job.completion_s)},{f(t_build)},{f(t_probe)},{f(job.energy_j)}\n"
        )
    out.write(f"makespan_s: {f(result.makespan_s)}\n")
    out.write(f"cluster_energy_j: {f(result.cluster_energy_j)}\n")
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            simulator.write_trace_csv(result, fh)
    return EXIT_OK


def _recommend(args) -> int:
    scn = load_scenario(args.scenario)
    floor = args.perf_floor if args.perf_floor is not None else scn.perf_floor
    if floor is None:
        raise InvalidSpec("perf_floor", "give --perf-floor or set perf_floor in [sweep]")
    best = explorer.recommend(_sweep_points(scn), floor)
    reporting.write_points_csv([best], sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clusterwatt",
        description="Energy and response-time models for parallel hash joins on mixed clusters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="fit a power model to utilization,watts samples")
    p.add_argument("samples")
    p.set_defaults(func=_calibrate)

    p = sub.add_parser("estimate", help="analytic time and energy for the scenario's cluster")
    p.add_argument("scenario")
    p.set_defaults(func=_estimate)

    p = sub.add_parser("sweep", help="evaluate every design in the scenario's sweep")
    p.add_argument("scenario")
    p.add_argument("--out", help="write the points CSV here instead of stdout")
    p.set_defaults(func=_sweep)

    p = sub.add_parser("simulate", help="fluid simulation of the scenario's queries")
    p.add_argument("scenario")
    p.add_argument(
        "--concurrency", type=int, default=1, help="run K copies of every query from t=0"
    )
    p.add_argument("--trace", help="write a time_s,node,cpu_util,watts CSV here")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("recommend", help="least-energy design meeting a performance floor")
    p.add_argument("scenario")
    p.add_argument("--perf-floor", type=float, help="minimum T_ref/T (default: from [sweep])")
    p.set_defaults(func=_recommend)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Infeasible, NoFeasibleDesign) as exc:
        print(f"clusterwatt: {exc}", file=sys.stderr)
        return EXIT_UNSATISFIABLE
    except (ParseError, InvalidSpec, InsufficientData, OSError, ValueError) as exc:
        print(f"clusterwatt: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
