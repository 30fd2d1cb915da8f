"""SO(3,2) spectrum-generating algebra toolkit for two-component Bose condensates.

Exact normal-ordered boson algebra, truncated Fock-space numerics, the
generator catalog, the mean-field diagonalization, coherent (DW) states and
their photon-statistics style correlation functions.
"""

__version__ = "0.1.0"

from .catalog import generator_polynomial, verify_extended_structure, verify_structure
from .correlations import CorrelationReport, brute_force_correlations, closed_form_report, g2_general, g2_special_B
from .meanfield import PhysicalParams, SolverOptions, self_consistent_solve, verify_diagonal
from .states import CoherentParams, DisplacementParams, dw_state, w_state

__all__ = [
    "__version__",
    "generator_polynomial",
    "verify_structure",
    "verify_extended_structure",
    "CorrelationReport",
    "brute_force_correlations",
    "closed_form_report",
    "g2_general",
    "g2_special_B",
    "PhysicalParams",
    "SolverOptions",
    "self_consistent_solve",
    "verify_diagonal",
    "CoherentParams",
    "DisplacementParams",
    "dw_state",
    "w_state",
]
