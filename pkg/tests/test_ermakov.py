import math

import numpy as np
import pytest

from magnetosc.dynamics import SolverOptions
from magnetosc.ermakov import (
    PinneyCoefficients,
    equilibrium_rho,
    ermakov_residual,
    fd_rho_ddot,
    pinney_compose,
    solve_ermakov,
    solve_linear_pair,
)
from magnetosc.errors import ZeroRho


def const(w2):
    return lambda t: w2


def modulated(t):
    return 1.0 + 0.1 * math.sin(t)


def test_linear_pair_unit_frequency():
    u, _, v, _ = solve_linear_pair(const(1.0), (0.0, 2.0))(math.pi / 2)
    assert (u, v) == pytest.approx((0.0, 1.0), abs=1e-9)


def test_linear_pair_frequency_two():
    u, _, v, _ = solve_linear_pair(const(4.0), (0.0, 2.0))(math.pi / 4)
    assert (u, v) == pytest.approx((0.0, 0.5), abs=1e-9)


def test_linear_pair_honours_start_time():
    u, _, v, _ = solve_linear_pair(const(1.0), (3.0, 6.0))(3.0 + math.pi / 2)
    assert (u, v) == pytest.approx((0.0, 1.0), abs=1e-9)


def test_modulated_wronskian_and_residual():
    sol = solve_ermakov(modulated, (0.0, 20.0))
    assert np.max(np.abs(sol.wronskian_samples - 1.0)) < 1e-9
    assert np.max(ermakov_residual(sol)) < 1e-8
    assert np.min(sol.rho) > 0


def test_rho_unit_frequency_is_one():
    sol = solve_ermakov(const(1.0), (0.0, 10.0))
    np.testing.assert_allclose(sol.rho, 1.0, rtol=0, atol=1e-10)


def test_rho_frequency_two():
    sol = solve_ermakov(const(4.0), (0.0, 5.0))
    rho, _ = sol.evaluate(math.pi / 4)
    assert rho == pytest.approx(0.5, abs=1e-9)
    assert np.max(ermakov_residual(sol)) < 1e-9
    exact = sol.rho_ddot(sol.mesh[5:-5])
    np.testing.assert_allclose(fd_rho_ddot(sol, sol.mesh[5:-5]), exact, rtol=0, atol=1e-6)


def test_equilibrium_branch_is_stationary():
    w2 = 2.7
    sol = solve_ermakov(const(w2), (0.0, 20.0), coefficients=PinneyCoefficients.equilibrium(w2))
    assert np.max(np.abs(sol.rho - equilibrium_rho(w2))) < 1e-10
    assert np.max(ermakov_residual(sol)) < 1e-10


def test_pinney_coefficients():
    c = PinneyCoefficients.from_initial(0.7, -0.4)
    assert c.A * c.C - c.B**2 == pytest.approx(1.0)
    rho, rho_dot = pinney_compose(1.0, 0.0, 0.0, 1.0, c)
    assert (rho, rho_dot) == pytest.approx((0.7, -0.4))
    with pytest.raises(ValueError):
        PinneyCoefficients(1.0, 0.0, 2.0)
    with pytest.raises(ZeroRho):
        PinneyCoefficients.from_initial(0.0, 1.0)
    with pytest.raises(ZeroRho):
        pinney_compose(np.array([0.0]), np.array([1.0]), np.array([0.0]), np.array([1.0]))


def test_phase_integral_against_trapezoid():
    sol = solve_ermakov(const(4.0), (0.0, 5.0))
    fine = np.linspace(0.0, 5.0, 400001)
    rho, _ = sol.evaluate(fine)
    trap = np.trapezoid(1.0 / rho**2, fine) if hasattr(np, "trapezoid") else np.trapz(1.0 / rho**2, fine)
    assert sol.phase_integral(5.0) == pytest.approx(trap, abs=1e-8)
    assert sol.phase_integral(0.0) == 0.0


def test_phase_integral_closed_form():
    # rho^2 = cos^2 2t + sin^2 2t / 4 gives int dt / rho^2 = atan(tan(2t) / 2)
    sol = solve_ermakov(const(4.0), (0.0, 0.7))
    for t in (0.1, 0.3, 0.7):
        exact = math.atan2(math.sin(2 * t), 2 * math.cos(2 * t))
        assert sol.phase_integral(t) == pytest.approx(exact, abs=1e-10)


def test_fixed_step_solver_option():
    sol = solve_ermakov(const(1.0), (0.0, 5.0), opts=SolverOptions(fixed_step=1e-3))
    np.testing.assert_allclose(sol.rho, 1.0, rtol=0, atol=1e-10)
