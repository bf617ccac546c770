"""Fractional evolution problems coupled to mixed variational inequalities.

Submodules
    mittag_leffler  scalar and matrix Mittag-Leffler functions
    fracops         time grids, fractional integrals and derivatives, residuals
    vi              sets, convex functions, monotone maps and the VI solver
    evolution       problem type and the Picard solver for mild solutions
    hypotheses      numerical probes of the standing assumptions
    problem_io      JSON problem files
    cli             the ``fpdvi`` command
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .evolution import FPDVIProblem, Trajectory, refine_and_estimate_order, solve_fpdvi
from .fracops import SampledPath, TimeGrid, caputo_derivative, fpdvi_residual, rl_integral
from .mittag_leffler import GeneratorMatrix, HankelPath, MLParams, ml_matrix, ml_scalar, mittag_leffler
from .problem_io import load_problem

__all__ = [
    "__version__",
    "FPDVIProblem",
    "Trajectory",
    "solve_fpdvi",
    "refine_and_estimate_order",
    "TimeGrid",
    "SampledPath",
    "rl_integral",
    "caputo_derivative",
    "fpdvi_residual",
    "MLParams",
    "HankelPath",
    "GeneratorMatrix",
    "ml_scalar",
    "ml_matrix",
    "mittag_leffler",
    "load_problem",
]
