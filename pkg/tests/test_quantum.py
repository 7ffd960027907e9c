import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magnetosc.errors import GridMismatch, HermiteOverflow, InvalidScenario, ZeroRho
from magnetosc.quantum import (
    LITERAL_CHAIN,
    VERBATIM,
    ChainConventions,
    Grid,
    QuadraticHamiltonian,
    QuantumNumbers,
    WaveField,
    WaveFrame,
    alpha_phase,
    chi,
    discrepancy_report,
    eigenvalue,
    grid_overlap,
    hermite,
    overlap_matrix,
    psi_closed_form,
    psi_compositional,
    read_binary,
    sample,
    schrodinger_residual,
    states_up_to,
    write_binary,
    xi,
    xi_from_values,
)
from magnetosc.quantum.grid import HEADER
from support import scenario, system

UNIT_RHO = (1.0, 0.0, 1.0, 0.0)


def unit_field(n, grid=None):
    grid = grid or Grid.square(8.0)
    return sample(lambda a, b: xi_from_values(n, a, b, UNIT_RHO), grid, 0.0, WaveFrame.TRANSFORMED)


def test_hermite_examples():
    assert hermite(0, 3.7) == 1.0
    assert hermite(1, 3.0) == 6.0
    assert hermite(3, 2.0) == 40.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 12), st.floats(-4, 4))
def test_hermite_matches_numpy(n, x):
    ref = np.polynomial.hermite.hermval(x, [0] * n + [1])
    assert hermite(n, x) == pytest.approx(ref, rel=1e-12, abs=1e-9)


def test_hermite_and_quantum_number_guards():
    with pytest.raises(HermiteOverflow):
        hermite(13, 0.5)
    with pytest.raises(HermiteOverflow):
        QuantumNumbers(13, 0)
    with pytest.raises(ValueError):
        QuantumNumbers(-1, 0)
    assert QuantumNumbers(13, 0, max_order=20).total == 13


def test_eigenvalue_examples():
    assert eigenvalue((0, 0)) == 1.0
    assert eigenvalue((2, 3)) == 6.0
    assert eigenvalue((0, 0), hbar=2.0) == 2.0


def test_states_up_to_ordering():
    assert [tuple(n) for n in states_up_to(2)] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_xi_point_values():
    assert xi((0, 0), 0.0, 0.0, 0.0, UNIT_RHO) == pytest.approx(1 / math.sqrt(math.pi))
    assert xi((0, 0), 1.0, 0.0, 0.0, UNIT_RHO) == pytest.approx(math.exp(-0.5) / math.sqrt(math.pi))
    with pytest.raises(ZeroRho):
        xi((0, 0), 0.0, 0.0, 0.0, (0.0, 0.0, 1.0, 0.0))


def test_xi_high_order_is_finite():
    value = xi((12, 12), 0.3, -0.2, 0.0, UNIT_RHO)
    assert np.isfinite(value)


def test_grid_overlaps():
    f00, f10 = unit_field((0, 0)), unit_field((1, 0))
    assert grid_overlap(f00, f00).real == pytest.approx(1.0, abs=1e-6)
    assert abs(grid_overlap(f00, f10)) < 1e-8
    assert f10.norm() == pytest.approx(1.0, abs=1e-6)


def test_orthonormal_up_to_total_four():
    fields = [unit_field(n) for n in states_up_to(4)]
    gram = overlap_matrix(fields)
    assert np.max(np.abs(gram - np.eye(len(fields)))) < 1e-6


def test_grid_overlap_requires_matching_grids():
    with pytest.raises(GridMismatch):
        grid_overlap(unit_field((0, 0)), unit_field((0, 0), Grid.square(7.0)))
    a = unit_field((0, 0))
    later = WaveField(a.grid, a.values, 1.0, a.frame)
    with pytest.raises(GridMismatch):
        grid_overlap(a, later)


def test_grid_and_field_validation():
    with pytest.raises(ValueError):
        Grid.square(1.0, points=8)
    with pytest.raises(ValueError):
        Grid(0.0, math.inf, 0.0, 1.0)
    with pytest.raises(ValueError):
        Grid(1.0, 0.0, 0.0, 1.0)
    g = Grid.square(1.0, 16)
    with pytest.raises(ValueError):
        WaveField(g, np.full((16, 16), np.nan), 0.0, WaveFrame.ORIGINAL)
    with pytest.raises(GridMismatch):
        WaveField(g, np.zeros((16, 17)), 0.0, WaveFrame.ORIGINAL)
    field = WaveField(g, np.zeros((16, 16)), 0.0, WaveFrame.ORIGINAL)
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_alpha_for_unit_rho():
    modes = system("identity").modes
    for t in (0.0, 1.0, 7.5):
        assert alpha_phase((0, 0), t, modes) == pytest.approx(-t, abs=1e-10)
    assert alpha_phase((2, 1), 3.0, modes) == pytest.approx(-4.0 * 3.0, abs=1e-9)


def test_alpha_rate_matches_rho():
    qs = system("modulated_stiffness")
    n, h = (1, 2), 1e-4
    for t in (1.0, 4.5, 13.0):
        fd = (alpha_phase(n, t + h, qs.modes) - alpha_phase(n, t - h, qs.modes)) / (2 * h)
        r1, _, r2, _ = qs.rho(t)
        assert fd == pytest.approx(-1.5 / r1**2 - 2.5 / r2**2, abs=1e-6)


def test_chi_at_start_equals_xi():
    qs = system("modulated_stiffness")
    X1, X2 = np.meshgrid(np.linspace(-3, 3, 9), np.linspace(-2, 2, 7))
    np.testing.assert_array_equal(chi((1, 1), X1, X2, 0.0, qs.modes), xi((1, 1), X1, X2, 0.0, qs.modes))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.floats(-4, 4), st.floats(-4, 4), st.floats(0, 20))
def test_chi_has_modulus_of_xi(n1, n2, x1, x2, t):
    modes = system("modulated_stiffness").modes
    assert abs(chi((n1, n2), x1, x2, t, modes)) == pytest.approx(abs(xi((n1, n2), x1, x2, t, modes)), rel=1e-12)


def test_ground_state_energy_from_stencils():
    field = unit_field((0, 0))
    h_psi = QuadraticHamiltonian(1.0, 1.0, 1.0, 1.0).apply(field)
    inner = field.values[2:-2, 2:-2]
    # fourth-order stencils at spacing 16/255
    assert np.max(np.abs(h_psi - inner)) < 1e-5 * np.max(np.abs(inner))


def test_schrodinger_residual_requires_even_steps():
    g = Grid.square(8.0, 32)
    fields = [unit_field((0, 0), g)]
    a, b, c = (WaveField(g, fields[0].values, t, WaveFrame.TRANSFORMED) for t in (0.0, 0.1, 0.3))
    with pytest.raises(GridMismatch):
        schrodinger_residual([a, b, c], QuadraticHamiltonian(1, 1, 1, 1))
    other = WaveField(Grid.square(7.0, 32), fields[0].values, 0.2, WaveFrame.TRANSFORMED)
    with pytest.raises(GridMismatch):
        schrodinger_residual([a, b, other], QuadraticHamiltonian(1, 1, 1, 1))


def test_identity_scenario_chain_is_trivial():
    qs = system("identity")
    X1, X2 = np.meshgrid(np.linspace(-4, 4, 21), np.linspace(-4, 4, 21))
    for t in (0.0, 2.3):
        c = chi((1, 2), X1, X2, t, qs.modes)
        comp = psi_compositional((1, 2), X1, X2, t, qs.params, qs.theta, qs.modes)
        closed = psi_closed_form((1, 2), X1, X2, t, qs.params, qs.theta, qs.modes)
        np.testing.assert_allclose(comp, c, rtol=0, atol=1e-10)
        np.testing.assert_allclose(closed, comp, rtol=0, atol=1e-10)
    origin = psi_closed_form((0, 0), 0.0, 0.0, 0.0, qs.params, qs.theta, qs.modes)
    assert origin == pytest.approx(1 / math.sqrt(math.pi))


def test_drifting_scenario_rejected():
    p = scenario("drifting").params
    with pytest.raises(InvalidScenario, match="theta_constancy"):
        psi_compositional((0, 0), 0.0, 0.0, 0.0, p, None, system("identity").modes)


def test_compositional_norm_on_unequal_masses():
    qs = system("unequal_masses")
    for t in (0.0, 11.0):
        assert qs.psi_field((1, 0), t).norm() == pytest.approx(1.0, abs=1e-6)


def test_alternative_conventions_fail_schrodinger_check():
    qs = system("symmetric")
    grid = qs.original_grid(128)
    assert qs.psi_residual((0, 0), 7.3, grid) < 1e-3
    assert qs.psi_residual((0, 0), 7.3, grid, conventions=LITERAL_CHAIN) > 1e-2
    flipped = system("unequal_masses")
    assert flipped.psi_residual((0, 0), 7.3, flipped.original_grid(128), conventions=ChainConventions(-1)) > 1e-2


def test_discrepancy_report_contents():
    qs = system("symmetric")
    report = discrepancy_report(qs, (0, 0), 7.3, qs.original_grid(64), residuals=False)
    assert report.row(VERBATIM.label).max_abs >= 0
    assert len(report.rows) == 4
    assert "closed_form[absolute,printed]" in report.format()
    assert report.to_dict()["n"] == (0, 0)


def test_binary_round_trip(tmp_path):
    field = system("symmetric").psi_field((1, 1), 2.0, system("symmetric").original_grid(32))
    path = tmp_path / "psi.bin"
    write_binary(path, field, (1, 1))
    raw = path.read_bytes()
    assert len(raw) == HEADER.size + 16 * 32 * 32
    assert raw[:8] == b"MAGWAVE\0"
    back, n = read_binary(path)
    assert n == (1, 1)
    assert back.grid == field.grid and back.t == field.t and back.frame == field.frame
    assert back.values.tobytes() == field.values.tobytes()


def test_binary_rejects_corruption(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"nonsense")
    with pytest.raises(ValueError):
        read_binary(path)


def test_sampling_is_independent_of_thread_count():
    qs = system("rotating")
    grid = qs.original_grid(96)
    one = qs.psi_field((1, 2), 3.0, grid, threads=1)
    for k in (2, 3, 7):
        assert qs.psi_field((1, 2), 3.0, grid, threads=k).values.tobytes() == one.values.tobytes()


def test_thread_count_environment(monkeypatch):
    from magnetosc.quantum.grid import thread_count

    monkeypatch.setenv("MAGNETOSC_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("MAGNETOSC_THREADS", "many")
    assert thread_count() == 1
