"""Chaplygin rolling-sphere dynamics.

Reduced coordinates (K, gamma), the standard / affine / conformally scaled
almost-Poisson coefficient tables, fixed-step integrators for the reduced,
full and multiplier formulations, and seeded verification suites for the
structural properties (Jacobi identity after scaling, Casimirs, invariant
measure, commuting rescaled flows, reduction consistency).
"""

from .model import (
    DerivedKinematics,
    FirstIntegrals,
    ReducedState,
    SphereParams,
    first_integrals,
    grad_hamiltonian,
    hamiltonian,
    kinematics,
    mu,
    omega_body,
    t_matrix,
    y_gamma,
)
from .brackets import (
    BracketTable,
    ScalarFieldWithGradient,
    bracket_eval,
    bracket_table,
    energy_field,
    ham_vector_field,
    jacobiator,
    momentum_square_field,
    vertical_momentum_field,
)
from .dynamics import (
    FullState,
    IntegrationError,
    MultiplierState,
    Trajectory,
    integrate,
    integrate_full,
    integrate_multiplier,
    integrate_reduced,
    integrate_rescaled,
    multiplier_rhs,
    multiplier_state_from_reduced,
    reduced_rhs,
)
from .verify import SampleSpec, VerificationReport, run_all

__version__ = "0.1.0"

__all__ = [
    "BracketTable",
    "DerivedKinematics",
    "FirstIntegrals",
    "FullState",
    "IntegrationError",
    "MultiplierState",
    "ReducedState",
    "SampleSpec",
    "ScalarFieldWithGradient",
    "SphereParams",
    "Trajectory",
    "VerificationReport",
    "bracket_eval",
    "bracket_table",
    "energy_field",
    "first_integrals",
    "grad_hamiltonian",
    "ham_vector_field",
    "hamiltonian",
    "integrate",
    "integrate_full",
    "integrate_multiplier",
    "integrate_reduced",
    "integrate_rescaled",
    "jacobiator",
    "kinematics",
    "momentum_square_field",
    "mu",
    "multiplier_rhs",
    "multiplier_state_from_reduced",
    "omega_body",
    "reduced_rhs",
    "run_all",
    "t_matrix",
    "vertical_momentum_field",
    "y_gamma",
]
