"""Exact constraint analysis for singular Lagrangians, constrained dynamics and the quantum ring."""

from .brackets import (
    PhaseSpace,
    RationalMatrix,
    RewriteRules,
    bracket_matrix,
    invert_matrix,
    poisson_bracket,
    reduce,
    weakly_equal,
)
from .dirac import (
    DiracStructure,
    analyze,
    bracket_table,
    consistency_chain,
    dirac_bracket,
    legendre_analyze,
    reduced_hamiltonian,
    verify_strong_zero,
)
from .dynamics import (
    compare,
    exact_circle,
    generate_eom,
    integrate_project,
    integrate_rk4,
)
from .estimators import ConstrainedIntegrator, DiracAnalyzer
from .expr import RationalExpr, SymbolTable, differentiate, evaluate, parse, substitute
from .model import Model, load_model
from .quantum import (
    RingParams,
    SpectrumResult,
    algebra_residuals,
    analytic_spectrum,
    fourier_spectrum,
    grid_spectrum,
    ground_energy,
    nonhermitian_ordering_demo,
    operator_matrix,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
