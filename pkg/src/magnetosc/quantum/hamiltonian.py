"""Finite-difference quadratic Hamiltonians and residual diagnostics.

All operators use fourth-order central stencils and are evaluated on the
grid interior (two points are dropped along each edge).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import GridMismatch
from ..profiles import SystemParams
from ..reduction import cyclotron, stiffness
from .eigen import eigenvalue
from .grid import WaveField

INNER = (slice(2, -2), slice(2, -2))


def d1(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order first derivative on the interior."""
    f = np.moveaxis(values, axis, 0)
    out = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    out = np.moveaxis(out, 0, axis)
    return out[:, 2:-2] if axis == 0 else out[2:-2, :]


def d2(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order second derivative on the interior."""
    f = np.moveaxis(values, axis, 0)
    out = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / (12.0 * h * h)
    out = np.moveaxis(out, 0, axis)
    return out[:, 2:-2] if axis == 0 else out[2:-2, :]


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """``P1^2/2M1 + P2^2/2M2 + (k11 X1^2 + k22 X2^2 + k12 X1 X2)/2 + (w2 P2 X1 - w1 P1 X2)/2``
    at one instant, with ``inv_mass_i = 1/M_i``."""

    inv_mass1: float
    inv_mass2: float
    k11: float
    k22: float
    k12: float = 0.0
    w1: float = 0.0
    w2: float = 0.0

    def apply(self, field: WaveField, hbar: float = 1.0) -> np.ndarray:
        """``H psi`` on the grid interior."""
        g = field.grid
        psi = field.values
        X1, X2 = (a[INNER] for a in g.mesh())
        inner = psi[INNER]
        out = -0.5 * hbar**2 * (self.inv_mass1 * d2(psi, g.dx, 0) + self.inv_mass2 * d2(psi, g.dy, 1))
        out = out + 0.5 * (self.k11 * X1**2 + self.k22 * X2**2 + self.k12 * X1 * X2) * inner
        if self.w1 or self.w2:
            # P = -i hbar d/dX; X1 and P2 commute, as do X2 and P1
            out = out - 0.5j * hbar * (self.w2 * X1 * d1(psi, g.dy, 1) - self.w1 * X2 * d1(psi, g.dx, 0))
        return out


def original_hamiltonian(params: SystemParams, t: float) -> QuadraticHamiltonian:
    """The charged-particle Hamiltonian in original coordinates."""
    w1c, w2c, _, _ = cyclotron(params, t)
    c1, c2, c3 = stiffness(params, t)
    return QuadraticHamiltonian(
        1.0 / params.m1.value(t), 1.0 / params.m2.value(t), c1, c2, c3, w1c, w2c
    )


def normal_hamiltonian(omega1_sq: float, omega2_sq: float) -> QuadraticHamiltonian:
    """Two decoupled unit-mass oscillators."""
    return QuadraticHamiltonian(1.0, 1.0, omega1_sq, omega2_sq)


def _l2(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def schrodinger_residual(
    fields: Sequence[WaveField], hamiltonian: QuadraticHamiltonian, hbar: float = 1.0
) -> float:
    """Relative L2 norm of ``i hbar d/dt psi - H psi`` at the middle field's time.

    ``fields`` holds the samples at ``t - dt, t, t + dt``; the time derivative is
    the central difference and ``hamiltonian`` is taken at ``t``.
    """
    before, mid, after = fields
    for f in (before, after):
        if f.grid != mid.grid:
            raise GridMismatch(f"grids differ: {f.grid} vs {mid.grid}")
    dt = after.t - mid.t
    if not dt > 0 or not math.isclose(mid.t - before.t, dt, rel_tol=1e-9, abs_tol=1e-15):
        raise GridMismatch(f"fields must be equally spaced in time, got {before.t}, {mid.t}, {after.t}")
    dpsi = (after.values[INNER] - before.values[INNER]) / (2.0 * dt)
    h_psi = hamiltonian.apply(mid, hbar)
    return _l2(1j * hbar * dpsi - h_psi) / _l2(h_psi)


def apply_invariant(field: WaveField, rho: tuple[float, float, float, float], hbar: float = 1.0) -> np.ndarray:
    """The quadratic invariant of the normal-frame oscillators acting on ``field``.

    Per mode ``(X/rho)^2 + (rho P - rho' X)^2`` with ``P = -i hbar d/dX``, using
    ``PX + XP = -i hbar (2 X d/dX + 1)``.
    """
    g = field.grid
    psi = field.values
    inner = psi[INNER]
    X = [a[INNER] for a in g.mesh()]
    out = np.zeros_like(inner)
    for axis, (r, rd, h) in enumerate(((rho[0], rho[1], g.dx), (rho[2], rho[3], g.dy))):
        x = X[axis]
        out += 0.5 * (
            (x / r) ** 2 * inner
            - hbar**2 * r * r * d2(psi, h, axis)
            + 1j * hbar * r * rd * (2.0 * x * d1(psi, h, axis) + inner)
            + rd * rd * x * x * inner
        )
    return out


def invariant_residual(field: WaveField, rho, n, hbar: float = 1.0) -> float:
    """Relative L2 residual of the eigenvalue equation for ``xi_n``."""
    lam = eigenvalue(n, hbar)
    target = lam * field.values[INNER]
    return _l2(apply_invariant(field, rho, hbar) - target) / _l2(target)
