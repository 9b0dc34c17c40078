"""Numerical lab for the stability of the Hartmann boundary layer.

The perturbation is evolved through the good unknown ``g = d_y u + u``, which
obeys a damped transport-diffusion equation with a Robin wall condition.
"""
from .dynamics import CFLError, SolverError, State, run_simulation, step_imex
from .grid import Grid, make_grid
from .norms import NormParams, NormReport, norms_derivative_route, norms_weight_route
from .profiles import ModelParams, hartmann_profile, initial_good_unknown
from .radius import RadiusState, smallness_gate, step_radius

__version__ = "0.1.0"

__all__ = [
    "CFLError",
    "Grid",
    "ModelParams",
    "NormParams",
    "NormReport",
    "RadiusState",
    "SolverError",
    "State",
    "hartmann_profile",
    "initial_good_unknown",
    "make_grid",
    "norms_derivative_route",
    "norms_weight_route",
    "run_simulation",
    "smallness_gate",
    "step_imex",
    "step_radius",
]
