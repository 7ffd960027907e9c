"""Invariant eigenfunctions, wave functions and grid diagnostics."""

from .chain import (
    CLOSED_FORM_VARIANTS,
    LITERAL_CHAIN,
    VERBATIM,
    ChainConventions,
    ClosedFormVariant,
    DiscrepancyReport,
    PhaseCoefficients,
    QuantumSystem,
    discrepancy_report,
    overlap_matrix,
    phase_coefficients,
    psi_closed_form,
    psi_compositional,
)
from .eigen import (
    MAX_ORDER,
    QuantumNumbers,
    alpha_phase,
    chi,
    eigenvalue,
    hermite,
    states_up_to,
    xi,
    xi_from_values,
)
from .grid import Grid, WaveField, WaveFrame, grid_overlap, read_binary, sample, write_binary
from .hamiltonian import (
    QuadraticHamiltonian,
    apply_invariant,
    invariant_residual,
    normal_hamiltonian,
    original_hamiltonian,
    schrodinger_residual,
)

__all__ = [name for name in dir() if not name.startswith("_")]
