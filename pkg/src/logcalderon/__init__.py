"""Numerical workbench for the logarithmic Laplacian Calderon problem.

Cell-indicator Galerkin forms of log(-Laplacian) in one and two
dimensions, the exterior Dirichlet problem, Dirichlet-to-Neumann maps and
monotonicity-based reconstruction of bounded potentials.
"""

__version__ = "0.1.0"

from .constants import DimensionalConstants, frac_constant, log_constants, log_symbol
from .dnmap import DNCache, DNMatrix, DNOracle, assemble_dn_map, integral_identity_residual, monotonicity_bounds
from .forms import (
    QuadratureSpec,
    SymmetricForm,
    assemble_fractional_form,
    assemble_h0_form,
    assemble_log_form,
    assemble_potential,
    mass_matrix,
)
from .fourier import assemble_abslog_gram, assemble_log_form_fourier
from .grid import CellField, Grid, RegionError, RegionSet, build_grid, define_regions
from .inversion import (
    MonotonicityVerdict,
    ReconstructionResult,
    localized_potential,
    monotonicity_compare,
    reconstruct_potential,
    runge_fit,
)
from .solver import CoercivityError, SolveReport, minimal_extension, solve_dirichlet
from .spectral import SpectrumReport, coercivity_check, dirichlet_spectrum, fractional_expansion_check

__all__ = [
    "CellField",
    "CoercivityError",
    "DNCache",
    "DNMatrix",
    "DNOracle",
    "DimensionalConstants",
    "Grid",
    "MonotonicityVerdict",
    "QuadratureSpec",
    "ReconstructionResult",
    "RegionError",
    "RegionSet",
    "SolveReport",
    "SpectrumReport",
    "SymmetricForm",
    "assemble_abslog_gram",
    "assemble_dn_map",
    "assemble_fractional_form",
    "assemble_h0_form",
    "assemble_log_form",
    "assemble_log_form_fourier",
    "assemble_potential",
    "build_grid",
    "coercivity_check",
    "define_regions",
    "dirichlet_spectrum",
    "frac_constant",
    "fractional_expansion_check",
    "integral_identity_residual",
    "localized_potential",
    "log_constants",
    "log_symbol",
    "mass_matrix",
    "minimal_extension",
    "monotonicity_bounds",
    "monotonicity_compare",
    "reconstruct_potential",
    "runge_fit",
    "solve_dirichlet",
]
