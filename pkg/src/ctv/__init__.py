"""Collaborative total variation for color images."""

__version__ = "0.1.0"

from .exceptions import ContractError, DivergenceError, RecipeError, UnsupportedNormError
from .norms import CATALOG, EXPERIMENT_NORMS, NormSpec, dual_witness, eval_norm
from .operators import BlurKernel, GradientOperator, gradient, gradient_adjoint
from .problems import ProblemSpec, psnr, solve
from .prox import prox_collab, project_dual_ball
from .singular import SingularVectorRecipe, build_singular_vector, verify_singular_vector
from .solver import SolverConfig, pdhg_solve

__all__ = [
    "BlurKernel",
    "CATALOG",
    "ContractError",
    "DivergenceError",
    "EXPERIMENT_NORMS",
    "GradientOperator",
    "NormSpec",
    "ProblemSpec",
    "RecipeError",
    "SingularVectorRecipe",
    "SolverConfig",
    "UnsupportedNormError",
    "build_singular_vector",
    "dual_witness",
    "eval_norm",
    "gradient",
    "gradient_adjoint",
    "pdhg_solve",
    "project_dual_ball",
    "prox_collab",
    "psnr",
    "solve",
    "verify_singular_vector",
]
