"""Wave functions in original coordinates.

``psi_compositional`` applies the five unitary operators one after another as
coordinate substitutions with amplitude and phase factors:

* ``U1`` reciprocal squeezes ``X1 -> r X1``, ``X2 -> X2 / r`` with ``r = (m1/m2)^(1/4)``,
* ``U2`` rotation by the Larmor phase ``phi``,
* ``V1`` squeeze by ``sqrt(m)`` on both axes with amplitude ``m^(1/2)``,
* ``V2`` rotation by ``theta/2``,
* ``V3`` the chirp ``exp(-i k |y|^2 / 4 hbar)``.

A squeeze ``exp((i/2hbar)(PX+XP)s)`` maps ``f(x) -> e^(s/2) f(e^s x)`` and a
rotation ``exp(-(i/hbar) a L)`` maps ``f(r, angle) -> f(r, angle - a)``.
:class:`ChainConventions` exposes the three choices that are easy to get
wrong, so that the alternatives can be shown to fail the Schrodinger check.

``psi_closed_form`` evaluates the single-formula expression, with switches
for the mass-rate term and the angular mixing of its quadratic phase.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..dynamics import SolverOptions
from ..ermakov import ErmakovSolution, PinneyCoefficients, solve_ermakov
from ..errors import InvalidFrequency
from ..profiles import SystemParams
from ..reduction import (
    DEFAULT_THETA_TOL,
    PhaseTable,
    mass_terms,
    normal_frequencies_sq,
    require_exact_chain,
    rotation_phase,
)
from .eigen import as_numbers, alpha_phase, chi, hermite, rho_values, xi, _log_norm
from .grid import Grid, WaveField, WaveFrame, auto_half_widths, grid_overlap, integrate_grid, sample
from .hamiltonian import normal_hamiltonian, original_hamiltonian, schrodinger_residual

MASS_RATES = ("logarithmic", "absolute")
MIXINGS = ("printed", "derived")
FREQUENCY_SAMPLES = 2001


@dataclass(frozen=True)
class ChainConventions:
    """Sign and rate choices of the operator chain.

    ``dilation_sign`` multiplies both squeeze exponents, ``half_angle_sign``
    the rotation by ``theta/2`` (``+1`` turns the argument by ``+theta/2``,
    matching the classical normal coordinates; ``-1`` is the literal operator
    exponent). ``mass_rate`` chooses ``mdot/m`` or ``mdot`` in the chirp.
    """

    dilation_sign: int = 1
    half_angle_sign: int = 1
    mass_rate: str = "logarithmic"

    def __post_init__(self):
        if self.dilation_sign not in (1, -1) or self.half_angle_sign not in (1, -1):
            raise ValueError("signs must be +1 or -1")
        if self.mass_rate not in MASS_RATES:
            raise ValueError(f"mass_rate must be one of {MASS_RATES}")


LITERAL_CHAIN = ChainConventions(dilation_sign=1, half_angle_sign=-1, mass_rate="absolute")


@dataclass(frozen=True)
class ClosedFormVariant:
    """``mass_derivative``: the ``1/2 d/dt sqrt(m1 m2)`` term taken as is
    (``absolute``) or divided by ``m`` (``logarithmic``). ``mixing``: the
    angular factors of the quadratic phase as printed or as re-derived."""

    mass_derivative: str = "absolute"
    mixing: str = "printed"

    def __post_init__(self):
        if self.mass_derivative not in MASS_RATES:
            raise ValueError(f"mass_derivative must be one of {MASS_RATES}")
        if self.mixing not in MIXINGS:
            raise ValueError(f"mixing must be one of {MIXINGS}")

    @property
    def label(self) -> str:
        return f"closed_form[{self.mass_derivative},{self.mixing}]"


VERBATIM = ClosedFormVariant()
CLOSED_FORM_VARIANTS = tuple(ClosedFormVariant(a, b) for b in MIXINGS for a in MASS_RATES)


def _turn(a: float, y1, y2):
    """Coordinates of the point at polar angle ``angle + a``."""
    c, s = math.cos(a), math.sin(a)
    return c * y1 - s * y2, s * y1 + c * y2


def _theta(params: SystemParams, theta):
    return require_exact_chain(params).theta if theta is None else theta


def psi_compositional(
    n,
    X1,
    X2,
    t: float,
    params: SystemParams,
    theta: float | None,
    rho: Sequence[ErmakovSolution],
    hbar: float = 1.0,
    conventions: ChainConventions = ChainConventions(),
    phi: float | None = None,
):
    """``U1 U2 V1 V2 V3 chi`` evaluated at ``(X1, X2)``.

    With ``theta=None`` the scenario is checked and its decoupling angle used.
    """
    theta = _theta(params, theta)
    phi = rotation_phase(params, t) if phi is None else phi
    m1, m2 = params.m1.value(t), params.m2.value(t)
    m, mdot, _ = mass_terms(params, t)
    sign = conventions.dilation_sign
    y1 = np.asarray(X1, dtype=float)
    y2 = np.asarray(X2, dtype=float)
    # U1: the two squeezes carry amplitudes r^(1/2) and r^(-1/2), which cancel
    r = (m1 / m2) ** (0.25 * sign)
    y1, y2 = r * y1, y2 / r
    # U2: exponent +(i/hbar) phi L
    y1, y2 = _turn(phi, y1, y2)
    # V1: e^s = sqrt(m) on both axes, amplitude e^(s/2) each
    k = m ** (0.5 * sign)
    y1, y2 = k * y1, k * y2
    # V2
    y1, y2 = _turn(conventions.half_angle_sign * theta / 2.0, y1, y2)
    # V3
    rate = mdot / m if conventions.mass_rate == "logarithmic" else mdot
    chirp = np.exp(-0.25j * rate * (y1**2 + y2**2) / hbar)
    return (k * chirp * chi(n, y1, y2, t, rho, hbar))[()]


@dataclass(frozen=True)
class PhaseCoefficients:
    gamma: complex
    beta: complex
    alpha: float


def phase_coefficients(
    n, t: float, params: SystemParams, rho: Sequence[ErmakovSolution], mass_derivative: str = "absolute"
) -> PhaseCoefficients:
    r1, rd1, r2, rd2 = rho_values(rho, t)
    m, mdot, _ = mass_terms(params, t)
    shift = 0.5 * (mdot if mass_derivative == "absolute" else mdot / m)
    gamma = rd1 / r1 + 1j / r1**2 - shift
    beta = rd2 / r2 + 1j / r2**2 - shift
    return PhaseCoefficients(complex(gamma), complex(beta), float(alpha_phase(n, t, rho)))


def psi_closed_form(
    n,
    X1,
    X2,
    t: float,
    params: SystemParams,
    theta: float | None,
    rho: Sequence[ErmakovSolution],
    hbar: float = 1.0,
    variant: ClosedFormVariant = VERBATIM,
    phi: float | None = None,
):
    """The single-formula wave function; the default variant is the literal one.

    The second Hermite argument uses ``X2``.
    """
    n = as_numbers(n)
    theta = _theta(params, theta)
    phi = rotation_phase(params, t) if phi is None else phi
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    m1, m2 = params.m1.value(t), params.m2.value(t)
    sm1, sm2 = math.sqrt(m1), math.sqrt(m2)
    r1, _, r2, _ = rho_values(rho, t)
    pc = phase_coefficients(n, t, params, rho, variant.mass_derivative)
    g, b = pc.gamma, pc.beta
    a = phi + theta / 2.0
    ca, sa = math.cos(a), math.sin(a)
    s = math.sqrt(hbar)
    arg1 = (sm1 * ca * X1 - sm2 * sa * X2) / (s * r1)
    arg2 = (sm1 * sa * X1 + sm2 * ca * X2) / (s * r2)
    two = theta + 2.0 * phi
    if variant.mixing == "printed":
        k1 = m1 * (g / 2 + b / 2 + (b / 2 - g / 2) * math.sin(two))
        k2 = m2 * (g / 2 + b / 2 - (b / 2 - g / 2) * math.sin(two))
        k12 = sm1 * sm2 * (b - g) * math.cos(two)
    else:
        k1 = m1 * ((g + b) / 2 + (g - b) / 2 * math.cos(two))
        k2 = m2 * ((g + b) / 2 - (g - b) / 2 * math.cos(two))
        k12 = sm1 * sm2 * (b - g) * math.sin(two)
    log_amp = _log_norm(n, r1, r2, hbar) + 0.25 * math.log(m1 * m2)
    quad = np.exp((0.5j / hbar) * (k1 * X1**2 + k2 * X2**2 + k12 * X1 * X2))
    herm = hermite(n.n1, arg1, n.max_order) * hermite(n.n2, arg2, n.max_order)
    return (math.exp(log_amp) * herm * quad * np.exp(1j * pc.alpha))[()]


# --------------------------------------------------------------------------
# a scenario prepared for wave-function work


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """A validated scenario with its decoupling angle, phase table and mode solutions."""

    params: SystemParams
    theta: float
    table: PhaseTable = field(repr=False)
    modes: tuple[ErmakovSolution, ErmakovSolution] = field(repr=False)

    @classmethod
    def build(
        cls,
        params: SystemParams,
        theta_tol: float = DEFAULT_THETA_TOL,
        opts: SolverOptions | None = None,
        coefficients: tuple[PinneyCoefficients, PinneyCoefficients] = (PinneyCoefficients(), PinneyCoefficients()),
        mesh_points: int = 1001,
    ) -> "QuantumSystem":
        theta = require_exact_chain(params, theta_tol).theta
        table = PhaseTable(params)
        times = np.linspace(params.t0, params.t1, FREQUENCY_SAMPLES)
        sq = np.array([normal_frequencies_sq(params, t, theta, table(t))[:2] for t in times])
        if not np.all(sq > 0):
            i = int(np.argmin(sq.min(axis=1)))
            raise InvalidFrequency(
                f"omega_sq_positive: Omega1^2={sq[i, 0]:.6g}, Omega2^2={sq[i, 1]:.6g} at t={times[i]:.6g}"
            )

        def mode(i):
            return lambda t: normal_frequencies_sq(params, t, theta, table(t))[i]

        modes = tuple(
            solve_ermakov(mode(i), params.interval, opts, coefficients=coefficients[i], mesh_points=mesh_points)
            for i in range(2)
        )
        return cls(params, theta, table, modes)

    @property
    def hbar(self) -> float:
        return self.params.hbar

    def phi(self, t: float) -> float:
        return self.table(t)

    def omega_sq(self, t: float) -> tuple[float, float]:
        o1, o2, _ = normal_frequencies_sq(self.params, t, self.theta, self.table(t))
        return o1, o2

    def rho(self, t: float) -> tuple[float, float, float, float]:
        return rho_values(self.modes, t)

    # grids -----------------------------------------------------------------

    def rho_max(self) -> tuple[float, float]:
        return float(np.max(self.modes[0].rho)), float(np.max(self.modes[1].rho))

    def transformed_grid(self, points: int = 256) -> Grid:
        w1, w2 = auto_half_widths(self.rho_max(), self.hbar)
        return Grid(-w1, w1, -w2, w2, points, points)

    def original_grid(self, points: int = 256) -> Grid:
        # normal coordinates are rotations of (sqrt(m1) X1, sqrt(m2) X2)
        times = np.linspace(self.params.t0, self.params.t1, FREQUENCY_SAMPLES)
        m1 = float(np.min(self.params.m1.value(times)))
        m2 = float(np.min(self.params.m2.value(times)))
        widest = max(self.rho_max())
        w1, w2 = auto_half_widths((widest, widest), self.hbar, (math.sqrt(m1), math.sqrt(m2)))
        return Grid(-w1, w1, -w2, w2, points, points)

    # fields ----------------------------------------------------------------

    def xi_field(self, n, t: float, grid: Grid | None = None, threads: int | None = None) -> WaveField:
        grid = grid or self.transformed_grid()
        rho = self.rho(t)
        return sample(lambda a, b: xi(n, a, b, t, rho, self.hbar), grid, t, WaveFrame.TRANSFORMED, threads)

    def chi_field(self, n, t: float, grid: Grid | None = None, threads: int | None = None) -> WaveField:
        grid = grid or self.transformed_grid()
        return sample(lambda a, b: chi(n, a, b, t, self.modes, self.hbar), grid, t, WaveFrame.TRANSFORMED, threads)

    def psi_field(
        self,
        n,
        t: float,
        grid: Grid | None = None,
        conventions: ChainConventions = ChainConventions(),
        threads: int | None = None,
    ) -> WaveField:
        grid = grid or self.original_grid()
        phi = self.phi(t)

        def f(a, b):
            return psi_compositional(n, a, b, t, self.params, self.theta, self.modes, self.hbar, conventions, phi)

        return sample(f, grid, t, WaveFrame.ORIGINAL, threads)

    def closed_form_field(
        self, n, t: float, grid: Grid | None = None, variant: ClosedFormVariant = VERBATIM, threads: int | None = None
    ) -> WaveField:
        grid = grid or self.original_grid()
        phi = self.phi(t)

        def f(a, b):
            return psi_closed_form(n, a, b, t, self.params, self.theta, self.modes, self.hbar, variant, phi)

        return sample(f, grid, t, WaveFrame.ORIGINAL, threads)

    # residuals -------------------------------------------------------------

    def default_dt(self) -> float:
        return 1e-4 * (self.params.t1 - self.params.t0)

    def stencil(self, build: Callable[[float], WaveField], t: float, dt: float | None = None):
        dt = self.default_dt() if dt is None else dt
        if t - dt < self.params.t0 or t + dt > self.params.t1:
            raise ValueError(f"t={t} is closer than dt={dt} to the end of the interval")
        return [build(t - dt), build(t), build(t + dt)]

    def chi_residual(self, n, t: float, grid: Grid | None = None, dt: float | None = None) -> float:
        grid = grid or self.transformed_grid()
        fields = self.stencil(lambda s: self.chi_field(n, s, grid), t, dt)
        return schrodinger_residual(fields, normal_hamiltonian(*self.omega_sq(t)), self.hbar)

    def psi_residual(
        self,
        n,
        t: float,
        grid: Grid | None = None,
        dt: float | None = None,
        conventions: ChainConventions = ChainConventions(),
        variant: ClosedFormVariant | None = None,
    ) -> float:
        """Residual against the original Hamiltonian; ``variant`` selects a closed form instead."""
        grid = grid or self.original_grid()
        if variant is None:
            build = lambda s: self.psi_field(n, s, grid, conventions)  # noqa: E731
        else:
            build = lambda s: self.closed_form_field(n, s, grid, variant)  # noqa: E731
        fields = self.stencil(build, t, dt)
        return schrodinger_residual(fields, original_hamiltonian(self.params, t), self.hbar)


# --------------------------------------------------------------------------
# closed form against the operator chain


@dataclass(frozen=True)
class VariantDiscrepancy:
    variant: str
    max_abs: float
    l2: float
    residual: float | None


@dataclass(frozen=True)
class DiscrepancyReport:
    """Closed-form variants measured against the compositional wave function."""

    n: tuple[int, int]
    t: float
    reference_residual: float | None
    rows: tuple[VariantDiscrepancy, ...]

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self, label: str) -> VariantDiscrepancy:
        return next(r for r in self.rows if r.variant == label)

    def format(self) -> str:
        lines = [f"n={self.n} t={self.t:.6g} compositional residual={_fmt(self.reference_residual)}"]
        for r in self.rows:
            lines.append(
                f"  {r.variant:<34} max|diff|={r.max_abs:.3e}  L2={r.l2:.3e}  residual={_fmt(r.residual)}"
            )
        return "\n".join(lines)


def _fmt(x):
    return "n/a" if x is None else f"{x:.3e}"


def discrepancy_report(
    system: QuantumSystem,
    n,
    t: float,
    grid: Grid | None = None,
    variants: Sequence[ClosedFormVariant] = CLOSED_FORM_VARIANTS,
    residuals: bool = True,
) -> DiscrepancyReport:
    """Pointwise and L2 differences of each closed-form variant from the chain.

    With ``residuals`` each candidate is also checked against the original
    Schrodinger equation, which needs ``t`` away from the interval ends.
    """
    n = as_numbers(n)
    grid = grid or system.original_grid()
    ref = system.psi_field(n, t, grid)
    ref_res = system.psi_residual(n, t, grid) if residuals else None
    rows = []
    for v in variants:
        other = system.closed_form_field(n, t, grid, v)
        diff = other.values - ref.values
        l2 = math.sqrt(max(integrate_grid(grid, np.abs(diff) ** 2).real, 0.0))
        res = system.psi_residual(n, t, grid, variant=v) if residuals else None
        rows.append(VariantDiscrepancy(v.label, float(np.max(np.abs(diff))), l2, res))
    return DiscrepancyReport((n.n1, n.n2), float(t), ref_res, tuple(rows))


def overlap_matrix(fields: Sequence[WaveField]) -> np.ndarray:
    k = len(fields)
    out = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(i, k):
            out[i, j] = grid_overlap(fields[i], fields[j])
            out[j, i] = np.conj(out[i, j])
    return out
