"""The invariant suite run by ``magnetosc validate``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..dynamics import classical_invariant, consistency_check, propagate
from ..ermakov import ermakov_residual, fd_rho_ddot
from ..errors import InvalidFrequency, InvalidScenario
from ..profiles import validate_params
from ..quantum import (
    VERBATIM,
    QuantumSystem,
    discrepancy_report,
    grid_overlap,
    invariant_residual,
    states_up_to,
)
from ..quantum.grid import Grid
from ..reduction import (
    DEFAULT_RATIO_TOL,
    STAGES,
    Frame,
    PhaseSpaceState,
    PhaseTable,
    decoupling_angle,
    effective_frequencies,
    map_vector,
    mass_ratio_drift,
    normal_frequencies_sq,
    stage_jacobian,
    symplectic_defect,
)
from .scenario import Scenario

SYMPLECTIC_POINTS = 100
DECOUPLING_SAMPLES = 256


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool
    informational: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["measured"] = _json_number(self.measured)
        return d


def _json_number(x: float):
    return x if math.isfinite(x) else str(x)


def below(name: str, measured: float, tolerance: float, note: str = "") -> Check:
    return Check(name, float(measured), tolerance, bool(measured < tolerance), note=note)


class Suite:
    def __init__(self, scenario: Scenario, fixed_step: float | None = None):
        self.scenario = scenario
        self.params = scenario.params
        self.opts = scenario.solver.options(fixed_step)
        self.ermakov_opts = scenario.ermakov.options(fixed_step)
        self.checks: list[Check] = []
        self.physics_error: str | None = None

    def add(self, check: Check):
        self.checks.append(check)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def report(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "passed": self.passed,
            "physics_error": self.physics_error,
            "checks": [c.to_dict() for c in self.checks],
        }

    # ------------------------------------------------------------------

    def run(self) -> "Suite":
        p = self.params
        params_report = validate_params(p)
        self.add(Check("parameters", float(len(params_report.violations)), 0.0, params_report.valid,
                       note="; ".join(v.message for v in params_report.violations)))
        if not params_report.valid:
            return self
        angle = decoupling_angle(p, self.scenario.theta_tolerance)
        self.add(below("theta_constancy", angle.max_deviation, self.scenario.theta_tolerance))
        ratio = below("mass_ratio_constancy", mass_ratio_drift(p), DEFAULT_RATIO_TOL)
        self.add(ratio)
        self._symplectic(angle.theta)
        self._round_trip()
        if not (angle.valid and ratio.passed):
            failed = [c.name for c in self.checks if not c.passed]
            self.physics_error = f"chain not exact: {', '.join(failed)}"
            return self
        theta = angle.theta
        table = PhaseTable(p)
        if not self._frequencies(theta, table):
            return self
        self._decoupling(theta, table)
        self._consistency(theta)
        try:
            system = QuantumSystem.build(
                p, self.scenario.theta_tolerance, self.ermakov_opts, self.scenario.ermakov.coefficients(),
                self.scenario.ermakov.mesh_points,
            )
        except (InvalidScenario, InvalidFrequency) as exc:
            self.physics_error = str(exc)
            return self
        self._ermakov(system)
        self._classical_invariant(system)
        self._quantum(system)
        return self

    def _symplectic(self, theta: float):
        rng = np.random.default_rng(20240601)
        p = self.params
        times = rng.uniform(p.t0, p.t1, SYMPLECTIC_POINTS)
        states = rng.normal(size=(SYMPLECTIC_POINTS, 4))
        table = PhaseTable(p)
        for source, target in STAGES:
            worst = max(
                symplectic_defect(stage_jacobian(source, target, p, y, t, theta, table(t)))
                for y, t in zip(states, times)
            )
            self.add(below(f"symplectic_{source.name.lower()}_to_{target.name.lower()}", worst, 1e-8))

    def _round_trip(self):
        p = self.params
        c = self.scenario.classical
        t_end = p.t1 if c.t_end is None else c.t_end
        start = PhaseSpaceState.from_vector(Frame.ORIGINAL, c.state, p.t0)
        fwd = propagate(start, p, t_end, self.opts, samples=2)
        end = PhaseSpaceState.from_vector(Frame.ORIGINAL, fwd.states[-1], t_end)
        back = propagate(end, p, p.t0, self.opts, samples=2)
        self.add(below("classical_round_trip", float(np.max(np.abs(back.states[-1] - start.vector))), 1e-8))

    def _frequencies(self, theta: float, table: PhaseTable) -> bool:
        p = self.params
        times = np.linspace(p.t0, p.t1, 2001)
        sq = np.array([normal_frequencies_sq(p, t, theta, table(t))[:2] for t in times])
        lowest = float(sq.min())
        ok = lowest > 0
        self.add(Check("omega_sq_positive", lowest, 0.0, ok, note="minimum over both modes; must exceed 0"))
        if not ok:
            self.physics_error = f"omega_sq_positive: minimum squared normal frequency {lowest:.6g}"
        return ok

    def _decoupling(self, theta: float, table: PhaseTable):
        p = self.params
        worst = 0.0
        for t in np.linspace(p.t0, p.t1, DECOUPLING_SAMPLES):
            phi = table(t)
            _, _, delta = normal_frequencies_sq(p, t, theta, phi)
            w1, w2 = effective_frequencies(p, t, phi)
            worst = max(worst, abs(delta) / max(1.0, abs(w1 - w2)))
        self.add(below("decoupling_delta", worst, 1e-10, note="|delta| / max(1, |w1^2 - w2^2|)"))

    def characteristic_end(self, theta: float) -> float:
        p = self.params
        o1, o2, _ = normal_frequencies_sq(p, p.t0, theta)
        period = 2 * math.pi / math.sqrt(min(o1, o2))
        return min(p.t1, p.t0 + 10 * period)

    def _consistency(self, theta: float):
        p = self.params
        start = PhaseSpaceState.from_vector(Frame.ORIGINAL, self.scenario.classical.state, p.t0)
        dev = consistency_check(start, p, self.characteristic_end(theta), theta, self.opts)
        self.add(below("cross_frame_consistency", dev, 1e-6, note="10 characteristic periods"))

    def _ermakov(self, system: QuantumSystem):
        for i, sol in enumerate(system.modes, start=1):
            self.add(below(f"wronskian_mode{i}", float(np.max(np.abs(sol.wronskian_samples - 1.0))), 1e-9))
            self.add(below(f"ermakov_residual_mode{i}", float(np.max(ermakov_residual(sol))), 1e-8))
            inner = sol.mesh[5:-5]
            exact = sol.rho_ddot(inner)
            rel = np.max(np.abs(fd_rho_ddot(sol, inner) - exact)) / max(1.0, float(np.max(np.abs(exact))))
            self.add(below(f"rho_ddot_fd_crosscheck_mode{i}", float(rel), 1e-6))
            self.add(Check(f"rho_positive_mode{i}", float(np.min(sol.rho)), 0.0, bool(np.min(sol.rho) > 0)))

    def _classical_invariant(self, system: QuantumSystem):
        p = self.params
        theta = system.theta
        y0 = map_vector(self.scenario.classical.state, Frame.ORIGINAL, Frame.NORMAL, p, p.t0, theta, system.phi(p.t0))
        traj = propagate(PhaseSpaceState.from_vector(Frame.NORMAL, y0, p.t0), p, p.t1, self.opts, theta=theta)
        values = np.array([classical_invariant(s, system.rho(s.t)) for s in traj.samples])
        drift = float(np.max(np.abs(values / values[0] - 1.0)))
        self.add(below("classical_invariant_drift", drift, 1e-7, note="relative, normal frame"))

    def _grid(self, system: QuantumSystem, frame: str) -> Grid:
        g = self.scenario.grid
        if g.half_widths is not None:
            w1, w2 = g.half_widths
            return Grid(-w1, w1, -w2, w2, g.points, g.points)
        if frame == "original":
            return system.original_grid(g.points)
        return system.transformed_grid(g.points)

    def _quantum(self, system: QuantumSystem):
        p = self.params
        grid_o = self._grid(system, "original")
        grid_t = self._grid(system, "transformed")
        times = np.linspace(p.t0, p.t1, 5)
        states = states_up_to(2)
        worst_norm = worst_overlap = 0.0
        for t in times:
            fields = [system.psi_field(n, t, grid_o) for n in states]
            for i, a in enumerate(fields):
                worst_norm = max(worst_norm, abs(grid_overlap(a, a).real - 1.0))
                for b in fields[i + 1 :]:
                    worst_overlap = max(worst_overlap, abs(grid_overlap(a, b)))
        self.add(below("psi_norm", worst_norm, 1e-6, note="n1+n2 <= 2 at 5 times"))
        self.add(below("psi_orthogonality", worst_overlap, 1e-6, note="n1+n2 <= 2 at 5 times"))
        t_mid = p.t0 + 0.5 * (p.t1 - p.t0)
        worst_inv = max(
            invariant_residual(system.xi_field(n, t_mid, grid_t), system.rho(t_mid), n, system.hbar)
            for n in states_up_to(3)
        )
        self.add(below("invariant_eigen_residual", worst_inv, 1e-3, note="n1+n2 <= 3"))
        chi_res = max(system.chi_residual(n, t_mid, grid_t) for n in self.scenario.quantum.states)
        self.add(below("chi_schrodinger_residual", chi_res, 1e-3))
        psi_res = max(system.psi_residual(n, t_mid, grid_o) for n in self.scenario.quantum.states)
        self.add(below("psi_schrodinger_residual", psi_res, 1e-3))
        report = discrepancy_report(system, self.scenario.quantum.states[0], t_mid, grid_o, residuals=False)
        verbatim = report.row(VERBATIM.label)
        self.checks.append(
            Check("closed_form_discrepancy", verbatim.max_abs, 1e-8, verbatim.max_abs < 1e-8, informational=True,
                  note=f"{verbatim.variant}: L2 {verbatim.l2:.3e}; report only")
        )
