"""Mixed variational inequality toolkit: sets, convex functions, monotone maps, solvers."""

from .functions import ConvexFunction, Quadratic, SeparablePiecewiseLinear, WeightedL1, Zero, prox
from .maps import Affine, CallableMap, MonotoneMap
from .sets import UNBOUNDED, Ball, Box, ConvexSet, HalfspaceIntersection, project
from .solver import (
    VIProblem,
    check_combination,
    natural_residual,
    resolvent,
    select_control,
    select_controls,
    sol_bound,
    solve_vi,
    solve_vi_batch,
)

__all__ = [
    "ConvexSet",
    "Box",
    "Ball",
    "HalfspaceIntersection",
    "UNBOUNDED",
    "project",
    "ConvexFunction",
    "Zero",
    "WeightedL1",
    "Quadratic",
    "SeparablePiecewiseLinear",
    "prox",
    "MonotoneMap",
    "Affine",
    "CallableMap",
    "VIProblem",
    "check_combination",
    "natural_residual",
    "resolvent",
    "select_control",
    "select_controls",
    "sol_bound",
    "solve_vi",
    "solve_vi_batch",
]
