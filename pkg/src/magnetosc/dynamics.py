"""Classical propagation in the original and normal frames.

The integrator is scipy's embedded Runge-Kutta 5(4) pair by default, with an
optional fixed-step classical RK4 for bit-reproducible runs. Both return a
dense solution so callers can sample at arbitrary times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import FrameMismatch, SolverFailure, ZeroRho
from .profiles import SystemParams
from .reduction import (
    Frame,
    PhaseSpaceState,
    PhaseTable,
    cyclotron,
    map_vector,
    normal_frequencies_sq,
    require_exact_chain,
    stiffness,
)


@dataclass(frozen=True)
class SolverOptions:
    """Integrator settings. ``fixed_step`` switches to classical RK4."""

    method: str = "RK45"
    rtol: float = 1e-10
    atol: float = 1e-12
    fixed_step: float | None = None
    max_step: float = math.inf


class DenseSolution:
    """Continuous solution of an ODE between ``t_start`` and ``t_end``."""

    def __init__(self, interp, nodes: np.ndarray, nfev: int, error_bound: float):
        self._interp = interp
        self.nodes = nodes
        self.steps = len(nodes) - 1
        self.nfev = nfev
        self.error_bound = error_bound

    def __call__(self, t) -> np.ndarray:
        """States at ``t``; shape ``(n,) + shape(t)``."""
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._interp(t.ravel()))
        return out.reshape((out.shape[0],) + t.shape)


def _rk4(fun, t0: float, t1: float, y0: np.ndarray, h: float) -> DenseSolution:
    n = max(1, int(math.ceil(abs(t1 - t0) / h)))
    ts = t0 + (t1 - t0) * np.arange(n + 1) / n
    ys = np.empty((n + 1, y0.size))
    fs = np.empty_like(ys)
    ys[0] = y0
    y = y0.astype(float)
    for k in range(n):
        t, dt = ts[k], ts[k + 1] - ts[k]
        k1 = np.asarray(fun(t, y))
        fs[k] = k1
        k2 = np.asarray(fun(t + dt / 2, y + dt / 2 * k1))
        k3 = np.asarray(fun(t + dt / 2, y + dt / 2 * k2))
        k4 = np.asarray(fun(t + dt, y + dt * k3))
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[k + 1] = y
    fs[n] = fun(ts[n], y)
    order = slice(None) if t1 >= t0 else slice(None, None, -1)
    spline = CubicHermiteSpline(ts[order], ys[order], fs[order], axis=0)

    def interp(t):
        return spline(t).T

    return DenseSolution(interp, ts, 4 * n + 1, math.nan)


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0,
    opts: SolverOptions | None = None,
) -> DenseSolution:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t1`` (either direction)."""
    opts = opts or SolverOptions()
    y0 = np.asarray(y0, dtype=float)
    if opts.fixed_step:
        return _rk4(fun, float(t0), float(t1), y0, opts.fixed_step)
    sol = solve_ivp(
        fun,
        (float(t0), float(t1)),
        y0,
        method=opts.method,
        rtol=opts.rtol,
        atol=opts.atol,
        max_step=opts.max_step,
        dense_output=True,
    )
    if not sol.success:
        raise SolverFailure(f"{opts.method} failed between {t0} and {t1}: {sol.message}")
    # accepted steps satisfy |local error| <= atol + rtol * |y| componentwise
    bound = float(opts.atol + opts.rtol * np.max(np.abs(sol.y)))
    return DenseSolution(sol.sol, sol.t, sol.nfev, bound)


# --------------------------------------------------------------------------
# Hamiltonians and equations of motion


def _original_rhs(params: SystemParams):
    def rhs(t, y):
        X1, X2, P1, P2 = y
        w1c, w2c, _, _ = cyclotron(params, t)
        c1, c2, c3 = stiffness(params, t)
        m1, m2 = params.m1.value(t), params.m2.value(t)
        return np.array(
            [
                P1 / m1 - 0.5 * w1c * X2,
                P2 / m2 + 0.5 * w2c * X1,
                -c1 * X1 - 0.5 * c3 * X2 - 0.5 * w2c * P2,
                -c2 * X2 - 0.5 * c3 * X1 + 0.5 * w1c * P1,
            ]
        )

    return rhs


def _normal_rhs(params: SystemParams, theta: float, table: PhaseTable):
    def rhs(t, y):
        Q1, Q2, P1, P2 = y
        o1sq, o2sq, _ = normal_frequencies_sq(params, t, theta, table(t))
        return np.array([P1, P2, -o1sq * Q1, -o2sq * Q2])

    return rhs


def hamiltonian_value(state: PhaseSpaceState, params: SystemParams, theta: float | None = None) -> float:
    """Energy in the original frame, or the two-oscillator energy in the normal frame."""
    t = state.t
    (q1, q2), (p1, p2) = state.q, state.p
    if state.frame == Frame.ORIGINAL:
        w1c, w2c, _, _ = cyclotron(params, t)
        c1, c2, c3 = stiffness(params, t)
        m1, m2 = params.m1.value(t), params.m2.value(t)
        return (
            p1**2 / (2 * m1)
            + p2**2 / (2 * m2)
            + 0.5 * (c1 * q1**2 + c2 * q2**2 + c3 * q1 * q2)
            + 0.5 * (w2c * p2 * q1 - w1c * p1 * q2)
        )
    if state.frame == Frame.NORMAL:
        if theta is None:
            raise FrameMismatch("the normal-frame energy needs theta")
        o1sq, o2sq, _ = normal_frequencies_sq(params, t, theta)
        return 0.5 * (p1**2 + p2**2) + 0.5 * o1sq * q1**2 + 0.5 * o2sq * q2**2
    raise FrameMismatch(f"energy is defined in the ORIGINAL and NORMAL frames, not {state.frame.name}")


@dataclass(frozen=True)
class Trajectory:
    frame: Frame
    times: np.ndarray
    states: np.ndarray  # (len(times), 4): q1, q2, p1, p2
    steps: int
    max_error_estimate: float
    dense: DenseSolution = field(repr=False, compare=False)

    @property
    def samples(self) -> list[PhaseSpaceState]:
        return [PhaseSpaceState.from_vector(self.frame, y, t) for t, y in zip(self.times, self.states)]

    @property
    def solver_stats(self) -> tuple[int, float]:
        return self.steps, self.max_error_estimate


def propagate(
    state0: PhaseSpaceState,
    params: SystemParams,
    t1: float,
    opts: SolverOptions | None = None,
    times: Sequence[float] | None = None,
    samples: int = 201,
    theta: float | None = None,
) -> Trajectory:
    """Integrate Hamilton's equations from ``state0.t`` to ``t1``.

    Works forwards or backwards in time. In the normal frame ``theta``
    defaults to the scenario's decoupling angle, which must be valid.
    """
    t0 = state0.t
    lo, hi = params.interval
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    if not (lo - tol <= t1 <= hi + tol and lo - tol <= t0 <= hi + tol):
        raise ValueError(f"propagation [{t0}, {t1}] leaves the scenario interval [{lo}, {hi}]")
    if state0.frame == Frame.ORIGINAL:
        rhs = _original_rhs(params)
    elif state0.frame == Frame.NORMAL:
        if theta is None:
            theta = require_exact_chain(params).theta
        rhs = _normal_rhs(params, theta, PhaseTable(params))
    else:
        raise FrameMismatch(f"propagation runs in the ORIGINAL or NORMAL frame, not {state0.frame.name}")
    dense = integrate(rhs, t0, t1, state0.vector, opts)
    ts = np.linspace(t0, t1, samples) if times is None else np.asarray(times, dtype=float)
    states = np.asarray(dense(ts)).T
    return Trajectory(state0.frame, ts, states, dense.steps, dense.error_bound, dense)


def consistency_check(
    state0: PhaseSpaceState,
    params: SystemParams,
    t1: float,
    theta: float,
    opts: SolverOptions | None = None,
    samples: int = 201,
) -> float:
    """Max deviation between direct and normal-frame propagation, in the original frame."""
    if state0.frame != Frame.ORIGINAL:
        raise FrameMismatch("consistency_check starts from an ORIGINAL-frame state")
    table = PhaseTable(params)
    direct = propagate(state0, params, t1, opts, samples=samples)
    y0n = map_vector(state0.vector, Frame.ORIGINAL, Frame.NORMAL, params, state0.t, theta, table(state0.t))
    start = PhaseSpaceState.from_vector(Frame.NORMAL, y0n, state0.t)
    normal = propagate(start, params, t1, opts, times=direct.times, theta=theta)
    back = np.array(
        [
            map_vector(y, Frame.NORMAL, Frame.ORIGINAL, params, t, theta, table(t))
            for t, y in zip(normal.times, normal.states)
        ]
    )
    return float(np.max(np.abs(back - direct.states)))


def classical_invariant(state: PhaseSpaceState, rho: tuple[float, float, float, float]) -> float:
    """Quadratic invariant of the two normal-frame oscillators.

    ``rho`` is ``(rho1, rho1_dot, rho2, rho2_dot)`` taken from solutions of the
    auxiliary equations for the matching frequencies.
    """
    if state.frame != Frame.NORMAL:
        raise FrameMismatch("the invariant is defined in the NORMAL frame")
    r1, rd1, r2, rd2 = rho
    if r1 == 0 or r2 == 0:
        raise ZeroRho("rho must be nonzero")
    (Q1, Q2), (P1, P2) = state.q, state.p
    return 0.5 * ((Q1 / r1) ** 2 + (r1 * P1 - rd1 * Q1) ** 2) + 0.5 * (
        (Q2 / r2) ** 2 + (r2 * P2 - rd2 * Q2) ** 2
    )
