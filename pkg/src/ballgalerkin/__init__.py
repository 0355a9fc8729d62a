"""Spectral Galerkin solution of nonlinear elliptic problems on domains mapped from the unit ball."""
from .assembly import DirichletData, NeumannData, Problem, build_system, lift_dirichlet, lift_neumann
from .basis import BasisSet, MultiIndexOrder, basis_size
from .config import ConfigError, load_config, parse_config, run_study
from .estimator import SpectralGalerkinSolver
from .expr import ExpressionError, differentiate, parse_expression
from .geometry import DomainMap, identity_map, map_ellipse, map_quadratic_2d, map_quadratic_3d, pull_back
from .quadrature import ball_rule, disk_rule
from .solver import (
    NonConvergence,
    SingularNewtonMatrix,
    SolveConfig,
    SpectralSolution,
    continue_in_degree,
    evaluation_grid,
    newton_solve,
    reference_error,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSet",
    "ConfigError",
    "DirichletData",
    "DomainMap",
    "ExpressionError",
    "MultiIndexOrder",
    "NeumannData",
    "NonConvergence",
    "Problem",
    "SingularNewtonMatrix",
    "SolveConfig",
    "SpectralGalerkinSolver",
    "SpectralSolution",
    "ball_rule",
    "basis_size",
    "build_system",
    "continue_in_degree",
    "differentiate",
    "disk_rule",
    "evaluation_grid",
    "identity_map",
    "lift_dirichlet",
    "lift_neumann",
    "load_config",
    "map_ellipse",
    "map_quadratic_2d",
    "map_quadratic_3d",
    "newton_solve",
    "parse_config",
    "parse_expression",
    "pull_back",
    "reference_error",
    "run_study",
]
