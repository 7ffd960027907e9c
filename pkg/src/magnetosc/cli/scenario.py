"""Scenario files: the single source of truth for a CLI run.

A scenario is a JSON object. Only ``name``, ``interval`` and ``profiles`` are
required; every other section has the defaults spelled out in the dataclasses
below (and in the README).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from ..dynamics import SolverOptions
from ..ermakov import PinneyCoefficients
from ..errors import ScenarioError
from ..profiles import SystemParams, params_from_dict, params_to_dict
from ..reduction import DEFAULT_THETA_TOL

TOP_LEVEL = {
    "name", "description", "interval", "e", "hbar", "profiles", "theta_tolerance",
    "samples", "solver", "classical", "ermakov", "grid", "quantum", "outputs",
}


@dataclass(frozen=True)
class SolverSettings:
    method: str = "RK45"
    rtol: float = 1e-10
    atol: float = 1e-12
    fixed_step: float = 1e-3  # used by --fixed-step when no step is given on the command line

    def options(self, fixed_step: float | None = None) -> SolverOptions:
        return SolverOptions(self.method, self.rtol, self.atol, fixed_step)


@dataclass(frozen=True)
class ClassicalSettings:
    state: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)
    t_end: float | None = None  # None: the end of the interval
    samples: int = 201


@dataclass(frozen=True)
class ErmakovSettings:
    rho1: tuple[float, float] = (1.0, 0.0)  # rho(t0), rho'(t0)
    rho2: tuple[float, float] = (1.0, 0.0)
    mesh_points: int = 1001
    method: str = "DOP853"
    rtol: float = 1e-12
    atol: float = 1e-14

    def coefficients(self) -> tuple[PinneyCoefficients, PinneyCoefficients]:
        return PinneyCoefficients.from_initial(*self.rho1), PinneyCoefficients.from_initial(*self.rho2)

    def options(self, fixed_step: float | None = None) -> SolverOptions:
        return SolverOptions(self.method, self.rtol, self.atol, fixed_step)


@dataclass(frozen=True)
class GridSettings:
    points: int = 256
    half_widths: tuple[float, float] | None = None  # None: eight Gaussian widths


@dataclass(frozen=True)
class QuantumSettings:
    states: tuple[tuple[int, int], ...] = ((0, 0),)
    times: tuple[float, ...] | None = None  # None: the start of the interval
    frame: str = "original"
    kind: str = "compositional"
    format: str = "csv"


@dataclass(frozen=True)
class OutputSettings:
    reduce: str = "reduce.csv"
    classical: str = "classical.csv"
    round_trip: str = "classical_round_trip.json"
    ermakov: str = "ermakov.csv"
    wavefunction: str = "psi_n{n1}{n2}_t{index}"
    validate: str = "validate.json"


@dataclass(frozen=True)
class Scenario:
    name: str
    params: SystemParams
    description: str = ""
    theta_tolerance: float = DEFAULT_THETA_TOL
    samples: int = 201
    solver: SolverSettings = field(default_factory=SolverSettings)
    classical: ClassicalSettings = field(default_factory=ClassicalSettings)
    ermakov: ErmakovSettings = field(default_factory=ErmakovSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    quantum: QuantumSettings = field(default_factory=QuantumSettings)
    outputs: OutputSettings = field(default_factory=OutputSettings)

    def __post_init__(self):
        if not self.name:
            raise ScenarioError("scenario name must be non-empty")
        positives = {
            "theta_tolerance": self.theta_tolerance,
            "solver.rtol": self.solver.rtol,
            "solver.atol": self.solver.atol,
            "solver.fixed_step": self.solver.fixed_step,
            "ermakov.rtol": self.ermakov.rtol,
            "ermakov.atol": self.ermakov.atol,
        }
        for key, value in positives.items():
            if not (math.isfinite(value) and value > 0):
                raise ScenarioError(f"{key} must be positive, got {value}")
        if self.samples < 2 or self.classical.samples < 2:
            raise ScenarioError("sample counts must be at least 2")
        if self.grid.points < 16:
            raise ScenarioError(f"grid.points must be at least 16, got {self.grid.points}")
        if self.quantum.frame not in ("original", "transformed"):
            raise ScenarioError(f"quantum.frame must be 'original' or 'transformed', got {self.quantum.frame!r}")
        if self.quantum.kind not in ("compositional", "closed_form"):
            raise ScenarioError(f"quantum.kind must be 'compositional' or 'closed_form', got {self.quantum.kind!r}")
        if self.quantum.format not in ("csv", "binary"):
            raise ScenarioError(f"quantum.format must be 'csv' or 'binary', got {self.quantum.format!r}")

    def quantum_times(self) -> tuple[float, ...]:
        return self.quantum.times if self.quantum.times is not None else (self.params.t0,)

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name, "description": self.description}
        doc.update(params_to_dict(self.params))
        doc["theta_tolerance"] = self.theta_tolerance
        doc["samples"] = self.samples
        for key in ("solver", "classical", "ermakov", "grid", "quantum", "outputs"):
            section = getattr(self, key)
            doc[key] = {f.name: _plain(getattr(section, f.name)) for f in fields(section)}
        return doc


def _plain(value):
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def _section(cls, raw: Any, key: str):
    if raw is None:
        return cls()
    if not isinstance(raw, Mapping):
        raise ScenarioError(f"'{key}' must be an object")
    known = {f.name: f for f in fields(cls)}
    extra = set(raw) - set(known)
    if extra:
        raise ScenarioError(f"unknown field(s) in '{key}': {sorted(extra)}")
    defaults = cls()
    kwargs = {}
    for name, value in raw.items():
        kwargs[name] = _coerce(value, getattr(defaults, name), f"{key}.{name}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid '{key}': {exc}") from exc


def _coerce(value, default, where: str):
    """Convert JSON values to the type of the field's default."""
    try:
        if value is None:
            return None
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError("expected true or false")
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or int(value) != value:
                raise TypeError("expected an integer")
            return int(value)
        if isinstance(default, float) or default is None and isinstance(value, (int, float)):
            if isinstance(value, bool):
                raise TypeError("expected a number")
            return float(value)
        if isinstance(default, str):
            if not isinstance(value, str):
                raise TypeError("expected a string")
            return value
        if isinstance(default, tuple) or default is None:
            if not isinstance(value, list):
                raise TypeError("expected a list")
            return _list(value, default)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    raise ScenarioError(f"{where}: unsupported value {value!r}")


def _list(value: list, default=None):
    """Nested JSON lists of numbers as nested tuples of floats."""
    out = []
    for item in value:
        if isinstance(item, list):
            out.append(_list(item))
        elif isinstance(item, bool) or not isinstance(item, (int, float)):
            raise TypeError(f"expected numbers, got {item!r}")
        else:
            out.append(float(item))
    return tuple(out)


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioError("a scenario must be a JSON object")
    extra = set(doc) - TOP_LEVEL
    if extra:
        raise ScenarioError(f"unknown top-level field(s) {sorted(extra)}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("'name' must be a non-empty string")
    params = params_from_dict(doc)
    try:
        theta_tol = float(doc.get("theta_tolerance", DEFAULT_THETA_TOL))
        samples = _coerce(doc.get("samples", 201), 201, "samples")
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"theta_tolerance: {exc}") from exc
    quantum = _section(QuantumSettings, doc.get("quantum"), "quantum")
    if not all(isinstance(s, tuple) and len(s) == 2 and all(v >= 0 and v == int(v) for v in s) for s in quantum.states):
        raise ScenarioError("quantum.states must be pairs of non-negative integers")
    states = tuple(tuple(int(v) for v in s) for s in quantum.states)
    quantum = QuantumSettings(states, quantum.times, quantum.frame, quantum.kind, quantum.format)
    classical = _section(ClassicalSettings, doc.get("classical"), "classical")
    if len(classical.state) != 4:
        raise ScenarioError("classical.state must hold four numbers X1, X2, P1, P2")
    ermakov = _section(ErmakovSettings, doc.get("ermakov"), "ermakov")
    for key in ("rho1", "rho2"):
        pair = getattr(ermakov, key)
        if len(pair) != 2 or not pair[0] > 0:
            raise ScenarioError(f"ermakov.{key} must be [rho0 > 0, rho_dot0]")
    grid = _section(GridSettings, doc.get("grid"), "grid")
    if grid.half_widths is not None and (len(grid.half_widths) != 2 or min(grid.half_widths) <= 0):
        raise ScenarioError("grid.half_widths must be two positive numbers")
    return Scenario(
        name=name,
        params=params,
        description=str(doc.get("description", "")),
        theta_tolerance=theta_tol,
        samples=samples,
        solver=_section(SolverSettings, doc.get("solver"), "solver"),
        classical=classical,
        ermakov=ermakov,
        grid=grid,
        quantum=quantum,
        outputs=_section(OutputSettings, doc.get("outputs"), "outputs"),
    )


def builtin_names() -> list[str]:
    root = resources.files("magnetosc") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_path(name: str):
    return resources.files("magnetosc") / "scenarios" / f"{name}.json"


def load_scenario(path: str | Path) -> Scenario:
    """Read a scenario file, or a shipped scenario by bare name."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and str(path) in builtin_names():
        text = builtin_path(str(path)).read_text()
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)
