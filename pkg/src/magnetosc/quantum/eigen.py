"""Invariant eigenfunctions and the transformed-frame Schrodinger solutions.

In the normal frame the two unit-mass oscillators share the invariant

    I = sum_i 1/2 [ (X_i / rho_i)^2 + (rho_i P_i - rho_i' X_i)^2 ]

whose eigenfunctions ``xi`` are Hermite functions scaled by ``rho_i`` with a
quadratic phase. ``chi = exp(i alpha) xi`` then solves the Schrodinger
equation of the two oscillators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..ermakov import ErmakovSolution
from ..errors import HermiteOverflow, ZeroRho

MAX_ORDER = 12


@dataclass(frozen=True)
class QuantumNumbers:
    n1: int
    n2: int
    max_order: int = MAX_ORDER

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if int(n) != n or n < 0:
                raise ValueError(f"quantum numbers must be non-negative integers, got {n}")
            if n > self.max_order:
                raise HermiteOverflow(f"quantum number {n} exceeds the Hermite guard {self.max_order}")

    @property
    def total(self) -> int:
        return self.n1 + self.n2

    def __iter__(self):
        return iter((self.n1, self.n2))


def as_numbers(n) -> QuantumNumbers:
    return n if isinstance(n, QuantumNumbers) else QuantumNumbers(*n)


def states_up_to(total: int) -> list[QuantumNumbers]:
    """All ``(n1, n2)`` with ``n1 + n2 <= total``, ordered by total then n1."""
    return [QuantumNumbers(k - j, j) for k in range(total + 1) for j in range(k + 1)]


def hermite(n: int, x, max_order: int = MAX_ORDER):
    """Physicists' Hermite polynomial by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"Hermite order must be non-negative, got {n}")
    if n > max_order:
        raise HermiteOverflow(f"Hermite order {n} exceeds the guard {max_order}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()]
    cur = 2.0 * x
    for k in range(1, n):
        prev, cur = cur, 2.0 * x * cur - 2.0 * k * prev
    return cur[()]


def eigenvalue(n, hbar: float = 1.0) -> float:
    """Invariant eigenvalue ``hbar (n1 + n2 + 1)``."""
    n = as_numbers(n)
    return hbar * (n.n1 + n.n2 + 1)


RhoInput = Sequence[ErmakovSolution] | Sequence[float]


def rho_values(rho: RhoInput, t) -> tuple[float, float, float, float]:
    """``(rho1, rho1_dot, rho2, rho2_dot)`` from two mode solutions or four numbers."""
    if len(rho) == 4:
        r1, rd1, r2, rd2 = (float(v) for v in rho)
    else:
        (r1, rd1), (r2, rd2) = (tuple(map(float, s.evaluate(t))) for s in rho)
    if not (r1 > 0 and r2 > 0):
        raise ZeroRho(f"rho must be positive, got rho1={r1}, rho2={r2}")
    return r1, rd1, r2, rd2


def _log_norm(n: QuantumNumbers, r1: float, r2: float, hbar: float) -> float:
    # factorials in log space so n = 12 stays finite
    return -0.5 * (
        math.log(math.pi * hbar)
        + math.lgamma(n.n1 + 1)
        + math.lgamma(n.n2 + 1)
        + (n.n1 + n.n2) * math.log(2.0)
        + math.log(r1)
        + math.log(r2)
    )


def xi_from_values(n, X1, X2, values: tuple[float, float, float, float], hbar: float = 1.0):
    """Eigenfunction for given ``(rho1, rho1_dot, rho2, rho2_dot)``."""
    n = as_numbers(n)
    r1, rd1, r2, rd2 = values
    if not (r1 > 0 and r2 > 0):
        raise ZeroRho(f"rho must be positive, got rho1={r1}, rho2={r2}")
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    s = math.sqrt(hbar)
    g1 = rd1 / r1 + 1j / r1**2
    g2 = rd2 / r2 + 1j / r2**2
    herm = hermite(n.n1, X1 / (s * r1), n.max_order) * hermite(n.n2, X2 / (s * r2), n.max_order)
    gauss = np.exp((0.5j / hbar) * (g1 * X1**2 + g2 * X2**2))
    return (math.exp(_log_norm(n, r1, r2, hbar)) * herm * gauss)[()]


def xi(n, X1, X2, t, rho: RhoInput, hbar: float = 1.0):
    return xi_from_values(n, X1, X2, rho_values(rho, t), hbar)


def alpha_phase(n, t, rho: Sequence[ErmakovSolution]):
    """``-(n1 + 1/2) int dt/rho1^2 - (n2 + 1/2) int dt/rho2^2`` from the mode start."""
    n = as_numbers(n)
    return -(n.n1 + 0.5) * rho[0].phase_integral(t) - (n.n2 + 0.5) * rho[1].phase_integral(t)


def chi(n, X1, X2, t, rho: Sequence[ErmakovSolution], hbar: float = 1.0):
    return np.exp(1j * alpha_phase(n, t, rho)) * xi(n, X1, X2, t, rho, hbar)
