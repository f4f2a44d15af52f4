"""Numerical experiments for weighted Sobolev embeddings and a Nehari-type eigenvalue problem."""

__version__ = "0.1.0"

from .discretization import Grid, ScalarField, VectorField, build_grid, integrate, sample
from .potentials import Potential, check_gradV, potential_from_spec
from .norms import h1v_norm, lw_tau_norm, norm_report, holder_chain_check
from .nehari import minimize, nehari_project, extract_solution, concentration_trace

__all__ = [
    "__version__",
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "integrate",
    "sample",
    "Potential",
    "check_gradV",
    "potential_from_spec",
    "h1v_norm",
    "lw_tau_norm",
    "norm_report",
    "holder_chain_check",
    "minimize",
    "nehari_project",
    "extract_solution",
    "concentration_trace",
]
