"""Time-dependent scenario parameters.

Every coefficient of the Hamiltonian (the two masses, the three stiffnesses
and the magnetic field) is a :class:`Profile`: a scalar function of time with
analytic first and second derivatives. Profiles accept scalars or numpy
arrays and are immutable.

Scenario files describe a profile as a JSON object with a ``kind`` key::

    {"kind": "constant", "value": 1.0}
    {"kind": "polynomial", "coefficients": [c0, c1, c2]}      # c0 + c1 t + c2 t^2
    {"kind": "sinusoidal", "amplitude": A, "frequency": w,
     "phase": p, "offset": c}                                 # A sin(w t + p) + c
    {"kind": "exponential", "amplitude": A, "rate": k,
     "offset": c}                                             # A exp(k t) + c
    {"kind": "tabulated", "t": [...], "y": [...]}             # natural cubic spline
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import OutOfRange, ScenarioError

__all__ = [
    "Profile",
    "Constant",
    "Polynomial",
    "Sinusoidal",
    "Exponential",
    "Tabulated",
    "SystemParams",
    "Violation",
    "ValidationReport",
    "eval_profile",
    "eval_derivative",
    "validate_params",
    "profile_from_dict",
    "params_from_dict",
    "params_to_dict",
]


def _out(t, values):
    return float(values) if np.ndim(t) == 0 else values


class Profile:
    """Base class. Subclasses implement ``_value`` and ``_derivative``."""

    kind: ClassVar[str] = ""

    def __call__(self, t):
        return self.value(t)

    def value(self, t):
        if isinstance(t, float):
            return self._scalar(t, 0)
        t_arr = np.asarray(t, dtype=float)
        return _out(t, self._value(t_arr))

    def derivative(self, t, order: int = 1):
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order}")
        if isinstance(t, float):
            return self._scalar(t, order)
        t_arr = np.asarray(t, dtype=float)
        return _out(t, self._derivative(t_arr, order))

    def _scalar(self, t: float, order: int) -> float:
        # fast path for the scalar calls made inside ODE right-hand sides
        arr = np.asarray(t)
        return float(self._value(arr) if order == 0 else self._derivative(arr, order))

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def _value(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _derivative(self, t: np.ndarray, order: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Profile):
    value_: float

    kind: ClassVar[str] = "constant"

    def _value(self, t):
        return np.full_like(t, self.value_)

    def _derivative(self, t, order):
        return np.zeros_like(t)

    def _scalar(self, t, order):
        return float(self.value_) if order == 0 else 0.0

    def to_dict(self):
        return {"kind": self.kind, "value": self.value_}


@dataclass(frozen=True)
class Polynomial(Profile):
    """``sum(coefficients[k] * t**k)``, ascending powers."""

    coefficients: tuple[float, ...]

    kind: ClassVar[str] = "polynomial"

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    def _value(self, t):
        return np.polynomial.polynomial.polyval(t, self.coefficients)

    def _derivative(self, t, order):
        c = np.polynomial.polynomial.polyder(self.coefficients, order)
        return np.polynomial.polynomial.polyval(t, c) + np.zeros_like(t)

    def to_dict(self):
        return {"kind": self.kind, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class Sinusoidal(Profile):
    """``amplitude * sin(frequency * t + phase) + offset``."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0

    kind: ClassVar[str] = "sinusoidal"

    def _value(self, t):
        return self.amplitude * np.sin(self.frequency * t + self.phase) + self.offset

    def _derivative(self, t, order):
        arg = self.frequency * t + self.phase
        if order == 1:
            return self.amplitude * self.frequency * np.cos(arg)
        return -self.amplitude * self.frequency**2 * np.sin(arg)

    def _scalar(self, t, order):
        arg = self.frequency * t + self.phase
        if order == 0:
            return self.amplitude * math.sin(arg) + self.offset
        if order == 1:
            return self.amplitude * self.frequency * math.cos(arg)
        return -self.amplitude * self.frequency**2 * math.sin(arg)

    def to_dict(self):
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class Exponential(Profile):
    """``amplitude * exp(rate * t) + offset``."""

    amplitude: float
    rate: float
    offset: float = 0.0

    kind: ClassVar[str] = "exponential"

    def _value(self, t):
        return self.amplitude * np.exp(self.rate * t) + self.offset

    def _derivative(self, t, order):
        return self.amplitude * self.rate**order * np.exp(self.rate * t)

    def _scalar(self, t, order):
        base = self.amplitude * self.rate**order * math.exp(self.rate * t)
        return base + self.offset if order == 0 else base

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "rate": self.rate, "offset": self.offset}


@dataclass(frozen=True)
class Tabulated(Profile):
    """Natural cubic spline through ``(t, y)`` knots; C2 on the knot range.

    Evaluation outside ``[t[0], t[-1]]`` raises :class:`OutOfRange`.
    """

    t: tuple[float, ...]
    y: tuple[float, ...]
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    kind: ClassVar[str] = "tabulated"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or t.size < 2:
            raise ValueError("tabulated profile needs matching 1-D t and y with at least 2 knots")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulated knots must be strictly increasing")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "y", tuple(y.tolist()))
        object.__setattr__(self, "_spline", CubicSpline(t, y, bc_type="natural"))

    @property
    def knot_range(self) -> tuple[float, float]:
        return self.t[0], self.t[-1]

    def _check(self, t):
        lo, hi = self.knot_range
        if np.any(t < lo) or np.any(t > hi):
            bad = t[(t < lo) | (t > hi)].ravel()[0]
            raise OutOfRange(f"t={bad!r} outside tabulated range [{lo}, {hi}]")

    def _value(self, t):
        self._check(t)
        return self._spline(t)

    def _derivative(self, t, order):
        self._check(t)
        return self._spline(t, order)

    def to_dict(self):
        return {"kind": self.kind, "t": list(self.t), "y": list(self.y)}


def eval_profile(profile: Profile, t):
    return profile.value(t)


def eval_derivative(profile: Profile, t, order: int = 1):
    return profile.derivative(t, order)


_FIELDS: dict[str, tuple[type[Profile], dict[str, str], set[str]]] = {
    # kind -> (class, file key -> constructor argument, required keys)
    "constant": (Constant, {"value": "value_"}, {"value"}),
    "polynomial": (Polynomial, {"coefficients": "coefficients"}, {"coefficients"}),
    "sinusoidal": (
        Sinusoidal,
        {"amplitude": "amplitude", "frequency": "frequency", "phase": "phase", "offset": "offset"},
        {"amplitude", "frequency"},
    ),
    "exponential": (
        Exponential,
        {"amplitude": "amplitude", "rate": "rate", "offset": "offset"},
        {"amplitude", "rate"},
    ),
    "tabulated": (Tabulated, {"t": "t", "y": "y"}, {"t", "y"}),
}


def profile_from_dict(doc: Mapping[str, Any] | float | int) -> Profile:
    """Build a profile from its scenario-file object. A bare number is a constant."""
    if isinstance(doc, (int, float)) and not isinstance(doc, bool):
        return Constant(float(doc))
    if not isinstance(doc, Mapping):
        raise ScenarioError(f"profile must be an object or a number, got {doc!r}")
    kind = doc.get("kind")
    if kind not in _FIELDS:
        raise ScenarioError(f"unknown profile kind {kind!r}; expected one of {sorted(_FIELDS)}")
    cls, keys, required = _FIELDS[kind]
    extra = set(doc) - set(keys) - {"kind"}
    if extra:
        raise ScenarioError(f"unknown field(s) {sorted(extra)} for {kind} profile")
    missing = required - set(doc)
    if missing:
        raise ScenarioError(f"missing field(s) {sorted(missing)} for {kind} profile")
    kwargs = {}
    for key, arg in keys.items():
        if key not in doc:
            continue
        val = doc[key]
        if isinstance(val, list):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
                raise ScenarioError(f"field {key!r} of {kind} profile must be numeric")
            val = tuple(float(v) for v in val)
        elif isinstance(val, (int, float)) and not isinstance(val, bool):
            val = float(val)
        else:
            raise ScenarioError(f"field {key!r} of {kind} profile must be numeric, got {val!r}")
        kwargs[arg] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid {kind} profile: {exc}") from exc


PROFILE_NAMES = ("m1", "m2", "C1", "C2", "C3", "B")


@dataclass(frozen=True)
class SystemParams:
    """The full parameter set of a scenario.

    ``m1, m2`` are the masses, ``C1, C2, C3`` the stiffness coefficients of
    ``(C1 X1^2 + C2 X2^2 + C3 X1 X2) / 2``, ``B`` the magnetic field, ``e``
    the charge and ``hbar`` the reduced Planck constant (natural units by
    default).
    """

    m1: Profile
    m2: Profile
    C1: Profile
    C2: Profile
    C3: Profile
    B: Profile
    interval: tuple[float, float]
    e: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        t0, t1 = self.interval
        object.__setattr__(self, "interval", (float(t0), float(t1)))

    @property
    def t0(self) -> float:
        return self.interval[0]

    @property
    def t1(self) -> float:
        return self.interval[1]

    def profiles(self) -> dict[str, Profile]:
        return {name: getattr(self, name) for name in PROFILE_NAMES}


@dataclass(frozen=True)
class Violation:
    check: str
    message: str
    t: float | None = None
    value: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


MASS_SAMPLES = 1000


def validate_params(params: SystemParams, samples: int = MASS_SAMPLES) -> ValidationReport:
    """Check mass positivity on a dense sample, and e, hbar and interval sanity."""
    out: list[Violation] = []
    t0, t1 = params.interval
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        out.append(Violation("interval", f"interval must satisfy t0 < t1, got [{t0}, {t1}]"))
        return ValidationReport(tuple(out))
    if not params.e > 0:
        out.append(Violation("charge", f"charge e must be positive, got {params.e}", value=params.e))
    if not params.hbar > 0:
        out.append(Violation("hbar", f"hbar must be positive, got {params.hbar}", value=params.hbar))

    ts = np.linspace(t0, t1, samples)
    for name, prof in params.profiles().items():
        try:
            vals = np.asarray(prof.value(ts), dtype=float)
        except OutOfRange as exc:
            out.append(Violation(f"{name}_range", str(exc)))
            continue
        bad = ~np.isfinite(vals)
        if name in ("m1", "m2"):
            bad |= vals <= 0
        if np.any(bad):
            k = int(np.argmax(bad))
            what = "positive" if name in ("m1", "m2") else "finite"
            out.append(
                Violation(
                    f"{name}_{what}",
                    f"{name}(t) must be {what}; first violation at t={ts[k]:.6g}: {vals[k]!r}",
                    t=float(ts[k]),
                    value=float(vals[k]),
                )
            )
    return ValidationReport(tuple(out))


def params_from_dict(doc: Mapping[str, Any]) -> SystemParams:
    """Parse the ``profiles``/``interval``/``e``/``hbar`` part of a scenario document."""
    profs = doc.get("profiles")
    if not isinstance(profs, Mapping):
        raise ScenarioError("scenario needs a 'profiles' object")
    extra = set(profs) - set(PROFILE_NAMES)
    if extra:
        raise ScenarioError(f"unknown profile name(s) {sorted(extra)}")
    missing = set(PROFILE_NAMES) - set(profs)
    if missing:
        raise ScenarioError(f"missing profile(s) {sorted(missing)}")
    interval = doc.get("interval")
    if not (isinstance(interval, (list, tuple)) and len(interval) == 2):
        raise ScenarioError("'interval' must be a two-element list [t0, t1]")
    try:
        t0, t1 = (float(v) for v in interval)
        e = float(doc.get("e", 1.0))
        hbar = float(doc.get("hbar", 1.0))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"non-numeric interval, e or hbar: {exc}") from exc
    built = {name: profile_from_dict(profs[name]) for name in PROFILE_NAMES}
    return SystemParams(interval=(t0, t1), e=e, hbar=hbar, **built)


def params_to_dict(params: SystemParams) -> dict[str, Any]:
    return {
        "interval": list(params.interval),
        "e": params.e,
        "hbar": params.hbar,
        "profiles": {name: prof.to_dict() for name, prof in params.profiles().items()},
    }
