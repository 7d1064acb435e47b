"""Mixed finite-element solver for Miura surfaces.

Typical use::

    from miura import hyperboloid_case, solve_case, solver_config
    case = hyperboloid_case(nx=4, ny=24)
    result = solve_case(case, solver_config(case))
"""
from .analysis import ConvergenceTable, constraint_fields, convergence_rate, error_norms
from .cases import (
    annulus_case,
    axisymmetric_case,
    deformed_hyperboloid_case,
    hyperboloid_case,
    integrate_rho,
    make_case,
)
from .forms import Assembler, assemble_jacobian, assemble_residual
from .mesh import Rect, build_rect_mesh
from .pipeline import convergence_study, solve_case, solver_config
from .recovery import recover_surface
from .solver import SolverConfig, initial_guess, newton_solve
from .spaces import BoundaryData, State, taylor_hood, validate_hypothesis

__version__ = "0.1.0"

__all__ = [
    "Assembler",
    "BoundaryData",
    "ConvergenceTable",
    "Rect",
    "SolverConfig",
    "State",
    "annulus_case",
    "assemble_jacobian",
    "assemble_residual",
    "axisymmetric_case",
    "build_rect_mesh",
    "constraint_fields",
    "convergence_rate",
    "convergence_study",
    "deformed_hyperboloid_case",
    "error_norms",
    "hyperboloid_case",
    "initial_guess",
    "integrate_rho",
    "make_case",
    "newton_solve",
    "recover_surface",
    "solve_case",
    "solver_config",
    "taylor_hood",
    "validate_hypothesis",
]
