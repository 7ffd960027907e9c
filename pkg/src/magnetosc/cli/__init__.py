"""Command-line front end: ``magnetosc [global flags] <command> [flags]``.

Exit codes: 0 success, 1 a validation or round-trip check failed, 2 bad
scenario file or parameters, 3 invalid physics (drifting decoupling angle,
drifting mass ratio, non-positive squared normal frequency), 4 numerical
failure (solver or quadrature).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..dynamics import hamiltonian_value, propagate
from ..ermakov import ermakov_residual
from ..errors import (
    InvalidFrequency,
    InvalidScenario,
    MagnetoscError,
    OutOfRange,
    QuadratureFailure,
    ScenarioError,
    SolverFailure,
)
from ..profiles import validate_params
from ..quantum import VERBATIM, QuantumSystem, write_binary
from ..quantum.grid import Grid, WaveField
from ..reduction import (
    Frame,
    PhaseSpaceState,
    PhaseTable,
    ReducedCoefficients,
    normal_frequencies_sq,
    reduced_coefficients,
    require_exact_chain,
)
from .checks import Suite
from .scenario import Scenario, load_scenario

EXIT_OK, EXIT_CHECK, EXIT_SCENARIO, EXIT_PHYSICS, EXIT_NUMERIC = 0, 1, 2, 3, 4
ROUND_TRIP_TOL = 1e-8


class CommandFailed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def write_csv(path: Path, header: list[str], rows) -> None:
    """17 significant digits, '.' decimal separator."""
    data = np.asarray(rows, dtype=float)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


# --------------------------------------------------------------------------
# commands


def _check_params(scenario: Scenario):
    report = validate_params(scenario.params)
    if not report.valid:
        v = report.violations[0]
        raise CommandFailed(EXIT_SCENARIO, f"{v.check}: {v.message}")


def _fixed(args, scenario: Scenario) -> float | None:
    if not args.fixed_step:
        return None
    step = scenario.solver.fixed_step if args.step is None else args.step
    if not step > 0:
        raise CommandFailed(EXIT_SCENARIO, f"--step must be positive, got {step}")
    return step


def cmd_reduce(scenario: Scenario, args) -> int:
    _check_params(scenario)
    p = scenario.params
    theta = require_exact_chain(p, scenario.theta_tolerance).theta
    table = PhaseTable(p)
    samples = args.samples or scenario.samples
    rows = [reduced_coefficients(p, t, theta, table(t)).as_row() for t in np.linspace(p.t0, p.t1, samples)]
    path = args.out / scenario.outputs.reduce
    write_csv(path, ReducedCoefficients.columns(), rows)
    print(f"theta={theta:.17g} rows={len(rows)} -> {path}")
    return EXIT_OK


def cmd_classical(scenario: Scenario, args) -> int:
    _check_params(scenario)
    p = scenario.params
    c = scenario.classical
    opts = scenario.solver.options(_fixed(args, scenario))
    state = tuple(args.state) if args.state else c.state
    t_end = args.t_end if args.t_end is not None else (p.t1 if c.t_end is None else c.t_end)
    samples = args.samples or c.samples
    _warn_unstable_modes(scenario)
    start = PhaseSpaceState.from_vector(Frame.ORIGINAL, state, p.t0)
    traj = propagate(start, p, t_end, opts, samples=samples)
    energies = [hamiltonian_value(s, p) for s in traj.samples]
    rows = np.column_stack([traj.times, traj.states, energies])
    path = args.out / scenario.outputs.classical
    write_csv(path, ["t", "X1", "X2", "P1", "P2", "energy"], rows)
    steps, err = traj.solver_stats
    print(f"steps={steps} max_error_estimate={err:.3e} -> {path}")
    if not args.round_trip:
        return EXIT_OK
    end = PhaseSpaceState.from_vector(Frame.ORIGINAL, traj.dense(t_end), t_end)
    back = propagate(end, p, p.t0, opts, samples=2)
    deviation = float(np.max(np.abs(back.states[-1] - start.vector)))
    passed = deviation < ROUND_TRIP_TOL
    rt_path = args.out / scenario.outputs.round_trip
    rt_path.write_text(
        json.dumps({"name": "classical_round_trip", "measured": deviation, "tolerance": ROUND_TRIP_TOL,
                    "passed": passed}, indent=2) + "\n"
    )
    print(f"classical_round_trip deviation={deviation:.3e} passed={passed} -> {rt_path}")
    return EXIT_OK if passed else EXIT_CHECK


def _warn_unstable_modes(scenario: Scenario):
    # inverted normal modes are fine for the original-frame propagator; say so
    try:
        theta = require_exact_chain(scenario.params, scenario.theta_tolerance).theta
    except InvalidScenario:
        return
    p = scenario.params
    table = PhaseTable(p)
    lowest = min(min(normal_frequencies_sq(p, t, theta, table(t))[:2]) for t in np.linspace(p.t0, p.t1, 257))
    if lowest <= 0:
        print(f"warning: omega_sq_positive fails (minimum {lowest:.6g}); propagating in the original frame only",
              file=sys.stderr)


def _system(scenario: Scenario, args) -> QuantumSystem:
    _check_params(scenario)
    e = scenario.ermakov
    return QuantumSystem.build(
        scenario.params, scenario.theta_tolerance, e.options(_fixed(args, scenario)), e.coefficients(),
        e.mesh_points,
    )


def cmd_ermakov(scenario: Scenario, args) -> int:
    system = _system(scenario, args)
    times = np.asarray(args.times, dtype=float) if args.times else system.modes[0].mesh
    cols = [times]
    for sol in system.modes:
        rho, rho_dot = sol.evaluate(times)
        cols += [rho, rho_dot]
    cols += [ermakov_residual(sol, times) for sol in system.modes]
    path = args.out / scenario.outputs.ermakov
    write_csv(path, ["t", "rho1", "rho1_dot", "rho2", "rho2_dot", "residual1", "residual2"], np.column_stack(cols))
    print(f"rows={len(times)} max_residual={float(np.max(cols[-2:])):.3e} -> {path}")
    return EXIT_OK


def _grid(scenario: Scenario, system: QuantumSystem, frame: str, points: int) -> Grid:
    hw = scenario.grid.half_widths
    if hw is not None:
        return Grid(-hw[0], hw[0], -hw[1], hw[1], points, points)
    return system.original_grid(points) if frame == "original" else system.transformed_grid(points)


def cmd_wavefunction(scenario: Scenario, args) -> int:
    q = scenario.quantum
    system = _system(scenario, args)
    frame = args.frame or q.frame
    kind = args.kind or q.kind
    fmt = args.format or q.format
    points = args.points or scenario.grid.points
    grid = _grid(scenario, system, frame, points)
    states = [tuple(args.n)] if args.n else list(q.states)
    times = list(args.times) if args.times else list(scenario.quantum_times())
    for n in states:
        for index, t in enumerate(times):
            field = _field(system, n, t, grid, frame, kind)
            stem = scenario.outputs.wavefunction.format(n1=n[0], n2=n[1], index=index)
            if fmt == "binary":
                path = args.out / f"{stem}.bin"
                write_binary(path, field, n)
            else:
                path = args.out / f"{stem}.csv"
                _write_field_csv(path, field)
            print(f"n=({n[0]},{n[1]}) t={t:.17g} norm={field.norm():.15f} -> {path}")
    return EXIT_OK


def _field(system: QuantumSystem, n, t: float, grid: Grid, frame: str, kind: str) -> WaveField:
    if frame == "transformed":
        return system.chi_field(n, t, grid)
    if kind == "closed_form":
        return system.closed_form_field(n, t, grid, VERBATIM)
    return system.psi_field(n, t, grid)


def _write_field_csv(path: Path, field: WaveField):
    X1, X2 = field.grid.mesh()
    v = field.values.ravel()
    rows = np.column_stack([X1.ravel(), X2.ravel(), v.real, v.imag, np.abs(v) ** 2])
    write_csv(path, ["x", "y", "re", "im", "density"], rows)


def cmd_validate(scenario: Scenario, args) -> int:
    suite = Suite(scenario, _fixed(args, scenario)).run()
    path = args.out / scenario.outputs.validate
    path.write_text(json.dumps(suite.report(), indent=2) + "\n")
    for c in suite.checks:
        status = "info" if c.informational else ("pass" if c.passed else "FAIL")
        print(f"{status:4} {c.name:<40} measured={c.measured:.3e} tolerance={c.tolerance:.1e}")
    print(f"-> {path}")
    if suite.checks and suite.checks[0].name == "parameters" and not suite.checks[0].passed:
        print(f"error: parameters: {suite.checks[0].note}", file=sys.stderr)
        return EXIT_SCENARIO
    if suite.physics_error:
        print(f"error: {suite.physics_error}", file=sys.stderr)
        return EXIT_PHYSICS
    if not suite.passed:
        failed = ", ".join(c.name for c in suite.checks if not c.passed and not c.informational)
        print(f"error: failed checks: {failed}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {
    "reduce": cmd_reduce,
    "classical": cmd_classical,
    "ermakov": cmd_ermakov,
    "wavefunction": cmd_wavefunction,
    "validate": cmd_validate,
}


# --------------------------------------------------------------------------
# argument parsing


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    default = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--scenario", help="scenario JSON file, or the name of a shipped scenario", **default)
    parser.add_argument("--out", type=Path, help="output directory (default: current directory)", **default)
    parser.add_argument(
        "--fixed-step", action="store_true",
        help="fixed-step classical RK4 (step from solver.fixed_step or --step); byte-reproducible output",
        **default,
    )
    parser.add_argument("--step", type=float, metavar="H", help="step size for --fixed-step", **default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magnetosc", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    parser.set_defaults(out=Path("."))
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = add("reduce", "tabulate the reduced coefficients")
    p.add_argument("--samples", type=int, help="number of sample times (default: scenario samples)")

    p = add("classical", "propagate in the original frame")
    p.add_argument("--state", type=float, nargs=4, metavar=("X1", "X2", "P1", "P2"))
    p.add_argument("--t-end", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--round-trip", action="store_true", help="propagate back to t0 and report the deviation")

    p = add("ermakov", "solve the auxiliary equations of both modes")
    p.add_argument("--times", type=float, nargs="+", help="output times (default: the mode mesh)")

    p = add("wavefunction", "sample wave functions on a grid")
    p.add_argument("--n", type=int, nargs=2, metavar=("N1", "N2"))
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--points", type=int, help="grid points per axis")
    p.add_argument("--format", choices=("csv", "binary"))
    p.add_argument("--frame", choices=("original", "transformed"))
    p.add_argument("--kind", choices=("compositional", "closed_form"))

    add("validate", "run the invariant suite and write a JSON report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "scenario", None):
        parser.error("--scenario is required")
    try:
        scenario = load_scenario(args.scenario)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](scenario, args)
    except CommandFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ScenarioError, OutOfRange) as exc:
        print(f"error: scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (InvalidScenario, InvalidFrequency) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (SolverFailure, QuadratureFailure) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MagnetoscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
