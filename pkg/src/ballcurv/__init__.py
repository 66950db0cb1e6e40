"""Spectral solver for the prescribed mean curvature problem on the unit ball
with rotationally symmetric boundary curvature."""

from .bubbles import Bubble, SigmaReport, bubble_boundary, bubble_function, sigma_decompose, substituted_grid
from .curvature import CurvatureProfile, builtin_profiles, flatness_fit, kazdan_warner_check
from .spectral import AxisymmetricFunction, RadialGrid, energy, j_functional, make_grid, residual, residual_norm
from .solver import MountainPassResult, SolverConfig, continuation, mountain_pass, newton_refine

__all__ = [
    "AxisymmetricFunction",
    "Bubble",
    "CurvatureProfile",
    "MountainPassResult",
    "RadialGrid",
    "SigmaReport",
    "SolverConfig",
    "bubble_boundary",
    "bubble_function",
    "builtin_profiles",
    "continuation",
    "energy",
    "flatness_fit",
    "j_functional",
    "kazdan_warner_check",
    "make_grid",
    "mountain_pass",
    "newton_refine",
    "residual",
    "residual_norm",
    "sigma_decompose",
    "substituted_grid",
]
