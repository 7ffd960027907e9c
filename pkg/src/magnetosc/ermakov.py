"""Auxiliary equation ``rho'' + Omega(t)^2 rho = rho^-3`` via the Pinney construction.

Two solutions ``u, v`` of the linear equation ``y'' + Omega^2 y = 0`` with unit
Wronskian give every real positive solution as

    rho = sqrt(A u^2 + 2 B u v + C v^2),   A C - B^2 = 1.

The default ``A = C = 1, B = 0`` starts from ``rho(t0) = 1, rho'(t0) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import DenseSolution, SolverOptions, integrate
from .errors import QuadratureFailure, ZeroRho

OmegaSq = Callable[[float], float]

PHASE_ATOL = 1e-10
# the 8th-order pair keeps the Wronskian near 1e-12; RK45 at 1e-10 sits at the 1e-9 edge
ERMAKOV_SOLVER = SolverOptions(method="DOP853", rtol=1e-12, atol=1e-14)
_GL_LOW = np.polynomial.legendre.leggauss(6)
_GL_HIGH = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class PinneyCoefficients:
    A: float = 1.0
    B: float = 0.0
    C: float = 1.0

    def __post_init__(self):
        if not self.A > 0 or abs(self.A * self.C - self.B**2 - 1.0) > 1e-12:
            raise ValueError(f"need A > 0 and A C - B^2 = 1, got {self}")

    @classmethod
    def from_initial(cls, rho0: float, rho_dot0: float) -> "PinneyCoefficients":
        """Coefficients giving ``rho(t0) = rho0``, ``rho'(t0) = rho_dot0``."""
        if not rho0 > 0:
            raise ZeroRho(f"rho0 must be positive, got {rho0}")
        A = rho0**2
        B = rho0 * rho_dot0
        return cls(A, B, (1.0 + B**2) / A)

    @classmethod
    def equilibrium(cls, omega_sq0: float) -> "PinneyCoefficients":
        """The stationary branch ``rho = Omega^-1/2`` for a constant frequency."""
        return cls.from_initial(omega_sq0**-0.25, 0.0)


@dataclass(frozen=True)
class LinearPair:
    """``u, v`` with ``u(t0)=1, u'(t0)=0, v(t0)=0, v'(t0)=1`` as a dense solution."""

    t0: float
    t1: float
    dense: DenseSolution

    def __call__(self, t):
        """Return ``(u, u_dot, v, v_dot)``."""
        return self.dense(t)


def solve_linear_pair(
    Omega_sq: OmegaSq, interval: tuple[float, float], opts: SolverOptions | None = None
) -> LinearPair:
    t0, t1 = interval

    def rhs(t, y):
        w2 = Omega_sq(t)
        return np.array([y[1], -w2 * y[0], y[3], -w2 * y[2]])

    dense = integrate(rhs, t0, t1, [1.0, 0.0, 0.0, 1.0], opts or ERMAKOV_SOLVER)
    return LinearPair(float(t0), float(t1), dense)


def pinney_compose(u, u_dot, v, v_dot, coeffs: PinneyCoefficients = PinneyCoefficients()):
    """Return ``(rho, rho_dot)`` from a unit-Wronskian linear pair."""
    A, B, C = coeffs.A, coeffs.B, coeffs.C
    rho_sq = A * u * u + 2 * B * u * v + C * v * v
    if np.any(rho_sq <= 0):
        raise ZeroRho("u and v vanish together; the pair is not independent")
    rho = np.sqrt(rho_sq)
    rho_dot = (A * u * u_dot + B * (u_dot * v + u * v_dot) + C * v * v_dot) / rho
    return rho, rho_dot


class ErmakovSolution:
    """One mode's auxiliary-equation solution: mesh arrays plus dense evaluation."""

    def __init__(
        self,
        Omega_sq: OmegaSq,
        pair: LinearPair,
        mesh: np.ndarray,
        coefficients: PinneyCoefficients = PinneyCoefficients(),
        phase_atol: float = PHASE_ATOL,
    ):
        self.Omega_sq = Omega_sq
        self.pair = pair
        self.coefficients = coefficients
        self.mesh = np.asarray(mesh, dtype=float)
        self.u, self.u_dot, self.v, self.v_dot = pair(self.mesh)
        self.rho, self.rho_dot = pinney_compose(self.u, self.u_dot, self.v, self.v_dot, coefficients)
        self.wronskian = 1.0
        self._build_phase(phase_atol)

    @property
    def t0(self) -> float:
        return self.pair.t0

    @property
    def wronskian_samples(self) -> np.ndarray:
        return self.u * self.v_dot - self.v * self.u_dot

    def evaluate(self, t):
        """``(rho, rho_dot)`` at arbitrary ``t`` in the interval."""
        u, ud, v, vd = self.pair(t)
        return pinney_compose(u, ud, v, vd, self.coefficients)

    def rho_ddot(self, t):
        """Second derivative from the linear states, without using the nonlinear ODE."""
        A, B, C = self.coefficients.A, self.coefficients.B, self.coefficients.C
        u, ud, v, vd = self.pair(t)
        rho, rho_dot = pinney_compose(u, ud, v, vd, self.coefficients)
        kinetic = A * ud * ud + 2 * B * ud * vd + C * vd * vd
        w2 = np.vectorize(self.Omega_sq, otypes=[float])(t)
        return (kinetic - rho_dot**2) / rho - w2 * rho

    def _inv_rho_sq(self, t):
        rho, _ = self.evaluate(t)
        return 1.0 / rho**2

    def _gauss(self, a, b):
        # 6- and 12-point Gauss-Legendre on each [a_k, b_k]; their gap is the error estimate
        a = np.atleast_1d(a)[:, None]
        b = np.atleast_1d(b)[:, None]
        half, mid = (b - a) / 2, (b + a) / 2
        lo = (half * self._inv_rho_sq(mid + half * _GL_LOW[0]) * _GL_LOW[1]).sum(axis=1)
        hi = (half * self._inv_rho_sq(mid + half * _GL_HIGH[0]) * _GL_HIGH[1]).sum(axis=1)
        return hi, np.abs(hi - lo)

    def _build_phase(self, atol: float):
        nodes = np.asarray(self.pair.dense.nodes, dtype=float)
        vals, errs = self._gauss(nodes[:-1], nodes[1:])
        if errs.sum() > atol:
            raise QuadratureFailure(f"phase integral error estimate {errs.sum():.2e} above {atol:.1e}")
        self._nodes = nodes
        self._cum = np.concatenate([[0.0], np.cumsum(vals)])

    def phase_integral(self, t):
        """``int_{t0}^{t} dt' / rho(t')^2``."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.searchsorted(self._nodes, ts, side="right") - 1, 0, len(self._nodes) - 2)
        part, _ = self._gauss(self._nodes[k], ts)
        out = self._cum[k] + part
        return float(out[0]) if np.ndim(t) == 0 else out.reshape(np.shape(t))


def solve_ermakov(
    Omega_sq: OmegaSq,
    interval: tuple[float, float],
    opts: SolverOptions | None = None,
    mesh=None,
    coefficients: PinneyCoefficients = PinneyCoefficients(),
    mesh_points: int = 1001,
) -> ErmakovSolution:
    t0, t1 = interval
    pair = solve_linear_pair(Omega_sq, (t0, t1), opts)
    if mesh is None:
        mesh = np.linspace(t0, t1, mesh_points)
    return ErmakovSolution(Omega_sq, pair, mesh, coefficients)


def ermakov_residual(sol: ErmakovSolution, t=None):
    """``|rho'' rho^3 + Omega^2 rho^4 - 1|`` with ``rho''`` from the linear states.

    ``t`` defaults to the mesh.
    """
    t = sol.mesh if t is None else t
    rho, _ = sol.evaluate(t)
    w2 = np.vectorize(sol.Omega_sq, otypes=[float])(t)
    return np.abs(sol.rho_ddot(t) * rho**3 + w2 * rho**4 - 1.0)


def fd_rho_ddot(sol: ErmakovSolution, t, h: float = 1e-3):
    """Fourth-order central finite-difference second derivative of the dense rho."""
    t = np.asarray(t, dtype=float)
    r = [sol.evaluate(t + k * h)[0] for k in (-2, -1, 0, 1, 2)]
    return (-r[0] + 16 * r[1] - 30 * r[2] + 16 * r[3] - r[4]) / (12 * h * h)


def max_rho(sol: ErmakovSolution) -> float:
    return float(np.max(sol.rho))


def equilibrium_rho(omega_sq: float) -> float:
    return math.pow(omega_sq, -0.25)
