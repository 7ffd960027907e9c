"""Derived coefficients and phase-space maps of the decoupling chain.

The chain takes the original coordinates ``(X1, X2, P1, P2)`` through

1. a mass-ratio squeeze ``x1 = r X1, x2 = X2 / r`` with ``r = (m1/m2)**(1/4)``
   (frame ``SCALED``),
2. a rotation by the Larmor phase ``phi(t) = -1/2 int omega_c dt``, which
   removes the magnetic ``L_z`` term (frame ``ROTATED``),
3. a rotation by ``theta/2`` plus a ``sqrt(m)`` dilation and a momentum shift
   ``-mdot/2 q``, which removes the mass and the cross coupling (frame
   ``NORMAL``).

In the normal frame the Hamiltonian is two unit-mass oscillators with
squared frequencies ``Omega1**2`` and ``Omega2**2``. The construction is exact
only when the decoupling angle is constant in time and the mass ratio
``m1/m2`` is constant; both conditions are measured here, never assumed.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import integrate
from scipy.interpolate import BPoly

from .errors import FrameMismatch, InvalidFrequency, InvalidScenario, QuadratureFailure
from .profiles import SystemParams

PHASE_ATOL = 1e-10
THETA_SAMPLES = 256
DEFAULT_THETA_TOL = 1e-8
DEFAULT_RATIO_TOL = 1e-10
# relative size below which both arguments of the angle are treated as zero
_DEGENERATE = 1e-12


# --------------------------------------------------------------------------
# scalar coefficients


def mass_terms(params: SystemParams, t):
    """Return ``(m, mdot, mddot)`` for the geometric mean mass ``sqrt(m1 m2)``."""
    m1, m2 = params.m1.value(t), params.m2.value(t)
    d1, d2 = params.m1.derivative(t, 1), params.m2.derivative(t, 1)
    dd1, dd2 = params.m1.derivative(t, 2), params.m2.derivative(t, 2)
    s = m1 * m2
    sd = d1 * m2 + m1 * d2
    sdd = dd1 * m2 + 2.0 * d1 * d2 + m1 * dd2
    m = np.sqrt(s)
    mdot = sd / (2.0 * m)
    mddot = sdd / (2.0 * m) - sd**2 / (4.0 * s * m)
    return m, mdot, mddot


def cyclotron(params: SystemParams, t):
    """Return ``(omega1c, omega2c, omega_c, m)``."""
    m1, m2 = params.m1.value(t), params.m2.value(t)
    eB = params.e * params.B.value(t)
    m = np.sqrt(m1 * m2)
    return eB / m1, eB / m2, eB / m, m


def stiffness(params: SystemParams, t):
    """Return ``(c1, c2, c3)``: the stiffnesses including the diamagnetic terms."""
    w1c, w2c, _, _ = cyclotron(params, t)
    c1 = params.C1.value(t) + params.m2.value(t) * w2c**2 / 4.0
    c2 = params.C2.value(t) + params.m1.value(t) * w1c**2 / 4.0
    return c1, c2, params.C3.value(t)


def scaled_stiffness(params: SystemParams, t):
    """Return ``(d1, d2, d3)``: stiffnesses seen in the mass-ratio scaled frame."""
    c1, c2, c3 = stiffness(params, t)
    ratio = np.sqrt(params.m2.value(t) / params.m1.value(t))
    return c1 * ratio, c2 / ratio, c3


def _omega_c(params: SystemParams):
    def f(t):
        return params.e * params.B.value(t) / np.sqrt(params.m1.value(t) * params.m2.value(t))

    return f


def _quad(f, a: float, b: float, atol: float) -> float:
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=atol, epsrel=0.0, limit=500)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"quadrature on [{a}, {b}] did not reach {atol:g}: {exc}") from exc
    if not err <= atol:
        raise QuadratureFailure(f"quadrature on [{a}, {b}] error estimate {err:g} above {atol:g}")
    return val


def rotation_phase(params: SystemParams, t: float, atol: float = PHASE_ATOL) -> float:
    """Larmor phase ``phi(t) = -1/2 int_{t0}^{t} omega_c``, anchored at ``phi(t0) = 0``."""
    return -0.5 * _quad(_omega_c(params), params.t0, float(t), 2.0 * atol)


def phase_series(params: SystemParams, times, atol: float = PHASE_ATOL) -> np.ndarray:
    """Larmor phase at increasing ``times``, as a running sum of segment quadratures."""
    times = np.asarray(times, dtype=float)
    edges = np.concatenate([[params.t0], times])
    seg_tol = 2.0 * atol / max(len(times), 1)
    f = _omega_c(params)
    pieces = [_quad(f, a, b, seg_tol) for a, b in zip(edges[:-1], edges[1:])]
    return -0.5 * np.cumsum(pieces)


class PhaseTable:
    """Larmor phase precomputed for repeated evaluation inside ODE right-hand sides.

    The anchors carry the running sum of per-segment adaptive quadratures;
    between anchors the phase is the quintic Hermite interpolant built from
    the exact values of ``phi``, ``phi' = -omega_c/2`` and ``phi''``.
    """

    def __init__(self, params: SystemParams, spacing: float = 0.02, atol: float = PHASE_ATOL):
        t0, t1 = params.interval
        segments = max(256, int(math.ceil((t1 - t0) / spacing)))
        self.anchors = np.linspace(t0, t1, segments + 1)
        f = _omega_c(params)
        # each segment gets its share of the budget so the running sum stays within atol
        seg_tol = 2.0 * atol / segments
        pieces = [_quad(f, a, b, seg_tol) for a, b in zip(self.anchors[:-1], self.anchors[1:])]
        phi = -0.5 * np.concatenate([[0.0], np.cumsum(pieces)])
        m, mdot, _ = mass_terms(params, self.anchors)
        B = np.asarray(params.B.value(self.anchors))
        Bdot = np.asarray(params.B.derivative(self.anchors, 1))
        wc = params.e * B / m
        wc_dot = params.e * (Bdot * m - B * mdot) / m**2
        self.values = phi
        self._poly = BPoly.from_derivatives(self.anchors, np.column_stack([phi, -0.5 * wc, -0.5 * wc_dot]))

    def __call__(self, t):
        out = self._poly(t)
        return float(out) if np.ndim(t) == 0 else out


def _phi(params: SystemParams, t, phi):
    if phi is not None:
        return phi
    return rotation_phase(params, t)


def rotated_coefficients(params: SystemParams, t: float, phi: float | None = None):
    """Return ``(lambda1, lambda2, lambda3)`` after rotation by the Larmor phase."""
    phi = _phi(params, t, phi)
    d1, d2, d3 = scaled_stiffness(params, t)
    c, s = math.cos(phi), math.sin(phi)
    lam1 = d1 * c * c + d2 * s * s - d3 * s * c
    lam2 = d2 * c * c + d1 * s * s + d3 * s * c
    lam3 = 2.0 * (d1 - d2) * s * c + d3 * (c * c - s * s)
    return lam1, lam2, lam3


def _mass_correction(params: SystemParams, t):
    m, mdot, mddot = mass_terms(params, t)
    return m, 0.25 * (mdot**2 / m**2 - 2.0 * mddot / m)


def effective_frequencies(params: SystemParams, t: float, phi: float | None = None):
    """Return ``(omega_tilde1_sq, omega_tilde2_sq)``; either may be negative."""
    lam1, lam2, _ = rotated_coefficients(params, t, phi)
    m, corr = _mass_correction(params, t)
    return lam1 / m + corr, lam2 / m + corr


def _angle(lam: tuple[float, float, float], m: float, w1sq: float, w2sq: float) -> float:
    num = lam[2]
    den = m * (w2sq - w1sq)
    scale = max(abs(lam[0]), abs(lam[1]), abs(lam[2]), m * abs(w1sq), m * abs(w2sq), 1e-300)
    if abs(num) <= _DEGENERATE * scale and abs(den) <= _DEGENERATE * scale:
        return 0.0
    theta = math.atan2(num, den)
    return math.pi if theta == -math.pi else theta


def _wrap(a):
    """Wrap an angle difference into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a), 2.0 * np.pi)


@dataclass(frozen=True)
class DecouplingAngle:
    theta: float
    max_deviation: float
    valid: bool
    tolerance: float


def theta_series(params: SystemParams, times, phases=None) -> np.ndarray:
    """The instantaneous decoupling angle at each of ``times``."""
    times = np.asarray(times, dtype=float)
    if phases is None:
        phases = phase_series(params, times)
    out = np.empty_like(times)
    for i, (t, phi) in enumerate(zip(times, phases)):
        lam = rotated_coefficients(params, t, phi)
        m, corr = _mass_correction(params, t)
        out[i] = _angle(lam, m, lam[0] / m + corr, lam[1] / m + corr)
    return out


def decoupling_angle(
    params: SystemParams, tol: float = DEFAULT_THETA_TOL, samples: int = THETA_SAMPLES
) -> DecouplingAngle:
    """Sample the decoupling angle and report its value at ``t0`` and its drift."""
    times = np.linspace(params.t0, params.t1, max(samples, THETA_SAMPLES))
    thetas = theta_series(params, times)
    dev = float(np.max(np.abs(_wrap(thetas - thetas[0]))))
    return DecouplingAngle(theta=float(thetas[0]), max_deviation=dev, valid=dev < tol, tolerance=tol)


def mass_ratio_drift(params: SystemParams, samples: int = THETA_SAMPLES) -> float:
    """Max relative change of ``m1/m2`` over the interval.

    The squeeze of the first stage is time-independent only when this is zero;
    otherwise it would generate an extra term the normal frame does not carry.
    """
    times = np.linspace(params.t0, params.t1, samples)
    ratio = np.asarray(params.m1.value(times)) / np.asarray(params.m2.value(times))
    return float(np.max(np.abs(ratio / ratio[0] - 1.0)))


def require_exact_chain(
    params: SystemParams, theta_tol: float = DEFAULT_THETA_TOL, ratio_tol: float = DEFAULT_RATIO_TOL
) -> DecouplingAngle:
    """Return the decoupling angle, or raise InvalidScenario if the chain is not exact."""
    angle = decoupling_angle(params, theta_tol)
    if not angle.valid:
        raise InvalidScenario(
            f"theta_constancy: decoupling angle drifts by {angle.max_deviation:.3e} rad "
            f"(tolerance {theta_tol:.1e}); the normal-mode reduction needs a constant angle"
        )
    drift = mass_ratio_drift(params)
    if drift > ratio_tol:
        raise InvalidScenario(
            f"mass_ratio_constancy: m1/m2 drifts by {drift:.3e} (tolerance {ratio_tol:.1e})"
        )
    return angle


def normal_frequencies_sq(params: SystemParams, t: float, theta: float, phi: float | None = None):
    """Return ``(Omega1_sq, Omega2_sq, delta)`` without the positivity check."""
    phi = _phi(params, t, phi)
    lam1, lam2, lam3 = rotated_coefficients(params, t, phi)
    m, corr = _mass_correction(params, t)
    w1sq, w2sq = lam1 / m + corr, lam2 / m + corr
    ch, sh = math.cos(theta / 2.0), math.sin(theta / 2.0)
    cross = lam3 * math.sin(theta) / (2.0 * m)
    o1sq = w1sq * ch * ch + w2sq * sh * sh - cross
    o2sq = w1sq * sh * sh + w2sq * ch * ch + cross
    delta = 0.5 * (w1sq - w2sq) * math.sin(theta) + lam3 * math.cos(theta) / (2.0 * m)
    return o1sq, o2sq, delta


def normal_frequencies(params: SystemParams, t: float, theta: float, phi: float | None = None):
    """Return ``(Omega1, Omega2, delta)``; raise InvalidFrequency on a non-positive square."""
    o1sq, o2sq, delta = normal_frequencies_sq(params, t, theta, phi)
    if not (o1sq > 0 and o2sq > 0):
        raise InvalidFrequency(
            f"omega_sq_positive: Omega1^2={o1sq:.6g}, Omega2^2={o2sq:.6g} at t={t:.6g}"
        )
    return math.sqrt(o1sq), math.sqrt(o2sq), delta


def mode_frequency_functions(params: SystemParams, theta: float, table: PhaseTable | None = None):
    """Callables ``t -> Omega_i(t)**2`` for the two normal modes."""
    table = table or PhaseTable(params)

    def make(i):
        def f(t):
            return normal_frequencies_sq(params, t, theta, table(t))[i]

        return f

    return make(0), make(1)


@dataclass(frozen=True)
class ReducedCoefficients:
    t: float
    omega1c: float
    omega2c: float
    omega_c: float
    m: float
    c1: float
    c2: float
    c3: float
    d1: float
    d2: float
    d3: float
    phi: float
    lambda1: float
    lambda2: float
    lambda3: float
    omega_tilde1_sq: float
    omega_tilde2_sq: float
    theta: float
    Omega1: float
    Omega2: float
    delta: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[float]:
        return list(asdict(self).values())


def reduced_coefficients(
    params: SystemParams, t: float, theta: float, phi: float | None = None
) -> ReducedCoefficients:
    phi = _phi(params, t, phi)
    w1c, w2c, wc, m = cyclotron(params, t)
    c1, c2, c3 = stiffness(params, t)
    d1, d2, d3 = scaled_stiffness(params, t)
    lam1, lam2, lam3 = rotated_coefficients(params, t, phi)
    wt1, wt2 = effective_frequencies(params, t, phi)
    o1, o2, delta = normal_frequencies(params, t, theta, phi)
    return ReducedCoefficients(
        float(t), w1c, w2c, wc, m, c1, c2, c3, d1, d2, d3, phi,
        lam1, lam2, lam3, wt1, wt2, theta, o1, o2, delta,
    )


# --------------------------------------------------------------------------
# phase-space frames


class Frame(enum.IntEnum):
    ORIGINAL = 0
    SCALED = 1
    ROTATED = 2
    NORMAL = 3


@dataclass(frozen=True)
class PhaseSpaceState:
    frame: Frame
    q: tuple[float, float]
    p: tuple[float, float]
    t: float

    @classmethod
    def from_vector(cls, frame: Frame, y, t: float) -> "PhaseSpaceState":
        y = np.asarray(y, dtype=float)
        return cls(Frame(frame), (float(y[0]), float(y[1])), (float(y[2]), float(y[3])), float(t))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.q[0], self.q[1], self.p[0], self.p[1]])


def _rot(angle: float, a, b, transpose: bool):
    """Apply ``R(angle) = [[c, s], [-s, c]]`` (or its transpose) to ``(a, b)``."""
    c, s = math.cos(angle), math.sin(angle)
    if transpose:
        return c * a - s * b, s * a + c * b
    return c * a + s * b, -s * a + c * b


def _stage_forward(k: Frame, y: np.ndarray, params: SystemParams, t: float, theta, phi) -> np.ndarray:
    """Map a vector from frame ``k`` to frame ``k + 1``."""
    q1, q2, p1, p2 = y
    if k == Frame.ORIGINAL:
        r = (params.m1.value(t) / params.m2.value(t)) ** 0.25
        return np.array([r * q1, q2 / r, p1 / r, r * p2])
    if k == Frame.SCALED:
        phi = _phi(params, t, phi)
        return np.array([*_rot(phi, q1, q2, True), *_rot(phi, p1, p2, True)])
    m, mdot, _ = mass_terms(params, t)
    sm = math.sqrt(m)
    Q1, Q2 = _rot(theta / 2.0, q1, q2, True)
    P1, P2 = _rot(theta / 2.0, p1 + 0.5 * mdot * q1, p2 + 0.5 * mdot * q2, True)
    return np.array([sm * Q1, sm * Q2, P1 / sm, P2 / sm])


def _stage_backward(k: Frame, y: np.ndarray, params: SystemParams, t: float, theta, phi) -> np.ndarray:
    """Map a vector from frame ``k`` to frame ``k - 1``."""
    a1, a2, b1, b2 = y
    if k == Frame.SCALED:
        r = (params.m1.value(t) / params.m2.value(t)) ** 0.25
        return np.array([a1 / r, r * a2, r * b1, b2 / r])
    if k == Frame.ROTATED:
        phi = _phi(params, t, phi)
        return np.array([*_rot(phi, a1, a2, False), *_rot(phi, b1, b2, False)])
    m, mdot, _ = mass_terms(params, t)
    sm = math.sqrt(m)
    q1, q2 = _rot(theta / 2.0, a1 / sm, a2 / sm, False)
    p1, p2 = _rot(theta / 2.0, sm * b1, sm * b2, False)
    return np.array([q1, q2, p1 - 0.5 * mdot * q1, p2 - 0.5 * mdot * q2])


def map_vector(
    y,
    source: Frame,
    target: Frame,
    params: SystemParams,
    t: float,
    theta: float | None = None,
    phi: float | None = None,
) -> np.ndarray:
    """Carry a ``(q1, q2, p1, p2)`` vector between frames at fixed time ``t``."""
    try:
        source, target = Frame(source), Frame(target)
    except ValueError as exc:
        raise FrameMismatch(str(exc)) from exc
    if theta is None and Frame.NORMAL in (source, target) and source != target:
        raise FrameMismatch("a theta is required to enter or leave the normal frame")
    y = np.asarray(y, dtype=float)
    k = source
    while k < target:
        y = _stage_forward(k, y, params, t, theta, phi)
        k = Frame(k + 1)
    while k > target:
        y = _stage_backward(k, y, params, t, theta, phi)
        k = Frame(k - 1)
    return y


def map_state(
    state: PhaseSpaceState,
    params: SystemParams,
    target_frame: Frame,
    theta: float | None = None,
    phi: float | None = None,
) -> PhaseSpaceState:
    if not isinstance(state, PhaseSpaceState):
        raise FrameMismatch(f"expected a PhaseSpaceState, got {type(state).__name__}")
    y = map_vector(state.vector, state.frame, target_frame, params, state.t, theta, phi)
    return PhaseSpaceState.from_vector(Frame(target_frame), y, state.t)


STAGES = (
    (Frame.ORIGINAL, Frame.SCALED),
    (Frame.SCALED, Frame.ROTATED),
    (Frame.ROTATED, Frame.NORMAL),
)


SYMPLECTIC_FORM = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


def stage_jacobian(
    source: Frame, target: Frame, params: SystemParams, y, t: float, theta=None, phi=None, h: float = 1e-4
) -> np.ndarray:
    """Central-difference Jacobian of ``map_vector`` at ``(y, t)``."""
    phi = _phi(params, t, phi)
    y = np.asarray(y, dtype=float)
    cols = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        hi = map_vector(y + e, source, target, params, t, theta, phi)
        lo = map_vector(y - e, source, target, params, t, theta, phi)
        cols.append((hi - lo) / (2.0 * h))
    return np.column_stack(cols)


def symplectic_defect(jac: np.ndarray) -> float:
    """``max |J^T S J - S|`` for the ``(q1, q2, p1, p2)`` ordering."""
    return float(np.max(np.abs(jac.T @ SYMPLECTIC_FORM @ jac - SYMPLECTIC_FORM)))
