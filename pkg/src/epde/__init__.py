"""Caputo fractional ODEs through the extended parametric reformulation.

The fractional problem ``D^alpha phi = F(t, phi)`` is rewritten as a family
of integer-order ODEs in an auxiliary variable theta, collocated at
Gauss-Jacobi nodes and marched with BDF-k. Work is O(N) in the number of
steps and the state is O(1) in N.
"""

__version__ = "0.1.0"

from .cases import CASES, case_exact, has_closed_form, make_case
from .core import (
    FdeProblem,
    Linear,
    Nonlinear,
    ProblemError,
    StabilityWarning,
    ThetaCoeffs,
    gamma_product,
    theta_coefficients,
    validate_problem,
)
from .mittag_leffler import MittagLefflerError, exact_solution, ml
from .oracles import frac_adams_solve, l1_solve
from .quadrature import QuadratureError, ThetaGrid, gauss_jacobi_grid, jacobi_recurrence, reconstruct
from .stability import RegionField, RegionSpec, amplification_matrix, region_scan, spectral_radius
from .stepper import (
    BdfScheme,
    PicardError,
    SolverError,
    SolverState,
    StepSystem,
    Trajectory,
    assemble_system,
    bdf_coefficients,
    exact_states,
    factorize,
    solve,
    startup,
    step_linear,
    step_nonlinear_picard,
)
from .studies import run_convergence, run_mconvergence
