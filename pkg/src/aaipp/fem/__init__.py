from .assembly import (
    assemble_convection,
    assemble_graddiv,
    assemble_load,
    assemble_mass,
    assemble_p1_divergence,
    assemble_p1_mass,
    assemble_stiffness,
    divergence_l2,
    h1_seminorm,
    l2_norm,
    p1_integral,
    p1_l2_norm,
    pressure_project,
)
from .boundary import DirichletData, apply_dirichlet, boundary_dirichlet, cavity_dirichlet
from .quadrature import DEGREE5, QuadratureRule, collapsed_gauss
from .space import FeSpace, build_space, interpolate, interpolate_scalar_p1

__all__ = [
    "DEGREE5",
    "DirichletData",
    "FeSpace",
    "QuadratureRule",
    "apply_dirichlet",
    "assemble_convection",
    "assemble_graddiv",
    "assemble_load",
    "assemble_mass",
    "assemble_p1_divergence",
    "assemble_p1_mass",
    "assemble_stiffness",
    "boundary_dirichlet",
    "build_space",
    "cavity_dirichlet",
    "collapsed_gauss",
    "divergence_l2",
    "h1_seminorm",
    "interpolate",
    "interpolate_scalar_p1",
    "l2_norm",
    "p1_integral",
    "p1_l2_norm",
    "pressure_project",
]
