"""Anderson accelerated iterated penalty Picard solver for 2D incompressible flow."""

from .anderson import FULL, AndersonConfig, StepReport, aa_initialize, aa_step, anderson_solve
from .estimators import IPPSolver
from .ipp import (
    IppState,
    NonlinearSolveError,
    Operators,
    ProblemConfig,
    SolveReport,
    aaipp_solve,
    apply_G,
    bdf2_transient_solve,
    ipp_solve,
    recover_pressure,
    solve,
)
from .mesh import BoundaryTag, TriMesh, barycentric_refine, cavity_mesh, structured_unit_square
from .problems import FlowProblem, ManufacturedSolution, cavity_problem

__version__ = "0.1.0"

__all__ = [
    "FULL",
    "AndersonConfig",
    "BoundaryTag",
    "FlowProblem",
    "IPPSolver",
    "IppState",
    "ManufacturedSolution",
    "NonlinearSolveError",
    "Operators",
    "ProblemConfig",
    "SolveReport",
    "StepReport",
    "TriMesh",
    "aa_initialize",
    "aa_step",
    "aaipp_solve",
    "anderson_solve",
    "apply_G",
    "barycentric_refine",
    "bdf2_transient_solve",
    "cavity_mesh",
    "cavity_problem",
    "ipp_solve",
    "recover_pressure",
    "solve",
    "structured_unit_square",
]
