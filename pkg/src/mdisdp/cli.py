"""Command-line front end.

Subcommands
-----------
``sweep <config>``
    Run a scenario (a config file or a preset name) and write one CSV row per
    sweep position. Columns, in order::

        axis_value, mu_0 .. mu_{k-1}, e_bit, P_pass, e_ph_sdp, gap,
        rate_sdp, rate_coin, rate_plob, rate_infinite, solver_status

    ``mu_k`` are the chosen intensities (one per basis for phase matching,
    the signal intensity otherwise). Methods that were not run or do not
    apply are written as ``nan``. ``solver_status`` is ``optimal`` for a
    certified point and ``failed:<status>x<count>,...`` when no grid point
    produced a certified bound.
``presets``
    List built-in scenarios and device presets.
``solve <problem-file>``
    Solve a serialised SDP and print the certified result.
``decoy-bounds <config>``
    Single-photon bounds for every sweep position and signal intensity of a
    decoy scenario.

The exit status is 1 when any requested point failed verification and 2 on
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

from .channel import decoy_stats, phase_protocol_stats, single_photon_stats
from .config import ConfigError, Scenario, load_config
from .decoy import DecoyInfeasible, bound_single_photon
from .montecarlo import sample_decoy_gains, sample_phase_stats
from .pipeline import device_at, optimize_sweep_point
from .presets import SCENARIO_TEXT, presets, scenario
from .rates import KeyRatePoint
from .sdp_model import read_problem
from .solver import solve
from .states import Family, build_protocol

DEFAULT_MC_TRIALS = 1_000_000
MC_SIGMAS = 5.0


def _fmt(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def csv_header(scenario: Scenario) -> list[str]:
    mus = [f"mu_{k}" for k in range(scenario.protocol.grid_width)]
    return ["axis_value", *mus, "e_bit", "P_pass", "e_ph_sdp", "gap", "rate_sdp", "rate_coin",
            "rate_plob", "rate_infinite", "solver_status"]


def csv_row(point: KeyRatePoint) -> list[str]:
    status = point.status
    if status == "failed":
        status = f"failed:{point.details.get('failures', '')}"
    r = point.rates
    return [_fmt(point.axis), *(_fmt(m) for m in point.intensities), _fmt(point.e_bit), _fmt(point.p_pass),
            _fmt(point.e_ph), _fmt(point.gap), _fmt(r.get("sdp")), _fmt(r.get("coin")), _fmt(r.get("plob")),
            _fmt(r.get("infinite_test")), status]


@contextmanager
def _mapper(threads: int):
    if threads <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield pool.map


def run_sweep(scenario: Scenario, threads: int = 1, progress=None) -> list[KeyRatePoint]:
    """Evaluate every sweep position; rows come back in sweep order."""
    points = []
    grid = scenario.search_grid()
    with _mapper(threads) as map_fn:
        for value in scenario.values:
            dev = device_at(scenario.device, scenario.axis, value)
            point = optimize_sweep_point(scenario.protocol, grid, dev, value, scenario.methods,
                                         scenario.solver, map_fn)
            points.append(point)
            if progress is not None:
                progress(point)
    return points


def point_failed(scenario: Scenario, point: KeyRatePoint) -> bool:
    return "sdp" in scenario.methods and point.status != "optimal"


def write_csv(scenario: Scenario, points, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(csv_header(scenario))
    for p in points:
        writer.writerow(csv_row(p))


def monte_carlo_check(scenario: Scenario, point: KeyRatePoint, seed: int, trials: int) -> list[str]:
    """Compare the honest statistics at the chosen intensities with sampling.

    Returns one message per disagreement beyond ``MC_SIGMAS`` standard errors.
    """
    dev = device_at(scenario.device, scenario.axis, point.axis)
    pc = scenario.protocol
    problems = []
    if pc.family is Family.DECOY_THA:
        mu = point.intensities[0]
        stats = decoy_stats((mu, pc.zeta_ratio * mu, pc.omega_ratio * mu), dev)
        for basis in (0, 1):
            gain, err = sample_decoy_gains((mu, mu), basis, dev, trials, seed + basis)
            q = stats.gains[(basis, 0, 0)]
            for name, est, exact in (("gain", gain, q), ("error mass", err, q * stats.qbers[(basis, 0, 0)])):
                if not est.agrees(exact, MC_SIGMAS):
                    problems.append(f"{point.axis}: basis {basis} {name} {exact!r} vs sampled {est.mean!r}")
        return problems
    if pc.family is Family.PHASE_MATCHING:
        p = build_protocol(pc.family, mus=point.intensities, num_bases=pc.num_bases)
    else:
        p = build_protocol(pc.family, mu=point.intensities[0], num_bases=pc.num_bases, nu=pc.nu)
    stats = phase_protocol_stats(p, dev)
    for g, (pp, err) in sample_phase_stats(p, dev, trials, seed).items():
        exact_err = stats.p_pass[g] * stats.e_bit[g]
        for name, est, exact in (("pass", pp, stats.p_pass[g]), ("error mass", err, exact_err)):
            if not est.agrees(exact, MC_SIGMAS):
                problems.append(f"{point.axis}: basis {g} {name} {exact!r} vs sampled {est.mean!r}")
    return problems


def _load(spec: str) -> Scenario:
    if spec in SCENARIO_TEXT and not os.path.exists(spec):
        return scenario(spec)
    return load_config(spec)


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if args.gap_tol is not None:
        sc = replace(sc, solver=replace(sc.solver, gap_tol=args.gap_tol))
    return sc


@contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def cmd_sweep(args) -> int:
    sc = _apply_overrides(_load(args.config), args)
    out_path = args.out or sc.output
    if args.figure and out_path is None:
        print("--figure needs an output path (--out or output.path)", file=sys.stderr)
        return 2

    def progress(point):
        print(f"[{sc.name}] {sc.axis}={point.axis:g} status={point.status}", file=sys.stderr)

    points = run_sweep(sc, args.threads, progress)
    with _output(out_path) as fh:
        write_csv(sc, points, fh)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(sc, points, Path(out_path).with_suffix(".png"))
    if args.seed is not None:
        for point in points:
            if point.status == "optimal" or "sdp" not in sc.methods:
                for msg in monte_carlo_check(sc, point, args.seed, args.mc_trials):
                    print(f"monte-carlo mismatch at {msg}", file=sys.stderr)
    failed = [p for p in points if point_failed(sc, p)]
    for p in failed:
        print(f"[{sc.name}] point {p.axis:g} failed verification ({p.details.get('failures', '')})",
              file=sys.stderr)
    return 1 if failed else 0


def cmd_presets(args) -> int:
    width = max(len(name) for name, _ in presets())
    for name, description in presets():
        print(f"{name:<{width}}  {description}")
    return 0


def cmd_solve(args) -> int:
    with open(args.problem, encoding="utf-8") as fh:
        problem = read_problem(fh)
    from .solver import SolverOptions

    opts = SolverOptions() if args.gap_tol is None else SolverOptions(gap_tol=args.gap_tol)
    report = solve(problem, opts)
    buf = io.StringIO()
    print(f"status: {report.status}", file=buf)
    print(f"primal: {float(report.primal)!r}", file=buf)
    print(f"dual: {float(report.dual)!r}", file=buf)
    print(f"gap: {float(report.gap)!r}", file=buf)
    print(f"iterations: {report.iterations}", file=buf)
    if report.verification is not None:
        v = report.verification
        print(f"certificate: {'passed' if v.passed else 'failed'} {v.message}".rstrip(), file=buf)
        print(f"inflation: {float(v.inflation)!r}", file=buf)
        for name, e in v.min_eigs.items():
            print(f"min_eig[{name}]: {float(e)!r}", file=buf)
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 0 if report.certified else 1


def cmd_decoy_bounds(args) -> int:
    sc = _load(args.config)
    pc = sc.protocol
    if pc.family is not Family.DECOY_THA:
        print("decoy-bounds needs a decoy_tha scenario", file=sys.stderr)
        return 2
    header = ["axis_value", "mu", "zeta", "omega", "basis", "gain", "qber", "yield_lower", "error_upper",
              "yield_single_photon", "error_single_photon", "yield_status", "error_status"]
    rows = []
    failed = False
    for value in sc.values:
        dev = device_at(sc.device, sc.axis, value)
        honest = single_photon_stats(dev)
        for (mu,) in sc.search_grid():
            intensities = (mu, pc.zeta_ratio * mu, pc.omega_ratio * mu)
            stats = decoy_stats(intensities, dev)
            for basis in (0, 1):
                try:
                    b = bound_single_photon(stats, basis, n_cut=pc.n_cut)
                    bounds = (b.yield_lower, b.error_upper, b.yield_status, b.error_status)
                except DecoyInfeasible:
                    bounds = (math.nan, math.nan, "infeasible", "infeasible")
                failed |= bounds[2] != "optimal" or bounds[3] != "optimal"
                rows.append([_fmt(value), *(_fmt(m) for m in intensities), str(basis),
                             _fmt(stats.gains[(basis, 0, 0)]), _fmt(stats.qbers[(basis, 0, 0)]),
                             _fmt(bounds[0]), _fmt(bounds[1]), _fmt(honest[basis][0]), _fmt(honest[basis][1]),
                             bounds[2], bounds[3]])
            if args.seed is not None:
                for basis in (0, 1):
                    gain, _ = sample_decoy_gains((mu, mu), basis, dev, args.mc_trials, args.seed + basis)
                    if not gain.agrees(stats.gains[(basis, 0, 0)], MC_SIGMAS):
                        print(f"monte-carlo mismatch at {value}: basis {basis} gain", file=sys.stderr)
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdisdp", description="Certified phase-error bounds and key-rate sweeps.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for grid evaluation")
    common.add_argument("--gap-tol", type=float, default=None, help="relative duality-gap tolerance")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for Monte-Carlo cross-checks of the honest statistics (off when absent)")
    common.add_argument("--mc-trials", type=int, default=DEFAULT_MC_TRIALS, help="Monte-Carlo trials per check")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", parents=[common], help="run a scenario and write CSV")
    p.add_argument("config", help="config file or preset name")
    p.add_argument("--figure", action="store_true", help="also render a PNG next to the CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("presets", parents=[common], help="list built-in scenarios")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("solve", parents=[common], help="solve a serialised SDP problem")
    p.add_argument("problem", help="problem file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("decoy-bounds", parents=[common], help="single-photon bounds of a decoy scenario")
    p.add_argument("config", help="config file or preset name")
    p.set_defaults(func=cmd_decoy_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    if args.mc_trials < 1:
        parser.error("--mc-trials must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
