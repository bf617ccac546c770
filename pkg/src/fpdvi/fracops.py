"""Riemann-Liouville integrals and Caputo derivatives on time grids.

Both operators use product integration: the sampled function is interpolated
piecewise linearly and the weakly singular kernel is integrated exactly
against the interpolant, so piecewise-linear data are reproduced to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._gamma import gamma
from .errors import DimensionMismatch, GridMismatch, InvalidOrder

__all__ = [
    "TimeGrid",
    "SampledPath",
    "rl_integral",
    "caputo_derivative",
    "fpdvi_residual",
    "residual_start_index",
]


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing nodes 0 = xi_0 < ... < xi_N = T."""

    nodes: np.ndarray
    kind: str = "uniform"
    gamma: float = 1.0

    def __post_init__(self) -> None:
        x = np.array(self.nodes, dtype=float).ravel()
        if x.size < 3:
            raise ValueError("a time grid needs N >= 2 intervals")
        if x[0] != 0.0 or not np.all(np.diff(x) > 0) or not np.all(np.isfinite(x)):
            raise ValueError("grid nodes must start at 0 and increase strictly")
        if self.kind not in ("uniform", "graded", "custom"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.gamma < 1.0:
            raise ValueError(f"grading exponent must be >= 1, got {self.gamma}")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @classmethod
    def uniform(cls, T: float, N: int) -> TimeGrid:
        _check_TN(T, N)
        return cls(T * np.arange(N + 1) / N, "uniform", 1.0)

    @classmethod
    def graded(cls, T: float, N: int, gamma: float) -> TimeGrid:
        _check_TN(T, N)
        return cls(T * (np.arange(N + 1) / N) ** gamma, "graded", float(gamma))

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def same_as(self, other: TimeGrid) -> bool:
        return self is other or (
            self.nodes.shape == other.nodes.shape and np.array_equal(self.nodes, other.nodes)
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeGrid) and self.same_as(other)

    __hash__ = None  # mutable-by-contents semantics; not hashable


def _check_TN(T: float, N: int) -> None:
    if not (T > 0 and math.isfinite(T)):
        raise ValueError(f"horizon T must be positive, got {T!r}")
    if int(N) != N or N < 2:
        raise ValueError(f"N must be an integer >= 2, got {N!r}")


@dataclass(frozen=True, eq=False)
class SampledPath:
    """Vector samples on a grid; ``values[k]`` belongs to node ``offset + k``."""

    grid: TimeGrid
    values: np.ndarray
    offset: int = 0

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionMismatch(f"path values must be (nodes, dim), got shape {v.shape}")
        if v.shape[0] != self.grid.nodes.size - self.offset:
            raise DimensionMismatch(
                f"{v.shape[0]} samples for {self.grid.nodes.size - self.offset} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes[self.offset :]


def _check_alpha(alpha: float, upper_open: bool) -> float:
    alpha = float(alpha)
    ok = 0.0 < alpha < 1.0 if upper_open else 0.0 < alpha <= 1.0
    if not ok:
        rng = "(0, 1)" if upper_open else "(0, 1]"
        raise InvalidOrder(f"alpha must lie in {rng}, got {alpha!r}")
    return alpha


def _full(path: SampledPath) -> np.ndarray:
    if path.offset != 0:
        raise DimensionMismatch("operator needs samples at every node, including xi_0")
    return path.values


def rl_integral(alpha: float, path: SampledPath) -> SampledPath:
    """Left-sided Riemann-Liouville integral of order alpha at every node."""
    alpha = _check_alpha(alpha, upper_open=False)
    phi = _full(path)
    x = path.grid.nodes
    dx = np.diff(x)
    slope = np.diff(phi, axis=0) / dx[:, None]
    out = np.zeros_like(phi)
    for i in range(1, x.size):
        b = x[i] - x[:i]
        a = x[i] - x[1 : i + 1]
        ba, aa = b**alpha, a**alpha
        m0 = (ba - aa) / alpha
        m1 = b * m0 - (ba * b - aa * a) / (alpha + 1.0)
        out[i] = m0 @ phi[:i] + m1 @ slope[:i]
    return SampledPath(path.grid, out / gamma(alpha))


def caputo_derivative(alpha: float, path: SampledPath) -> SampledPath:
    """L1 approximation of the Caputo derivative at nodes xi_1..xi_N (offset 1)."""
    alpha = _check_alpha(alpha, upper_open=True)
    phi = _full(path)
    x = path.grid.nodes
    slope = np.diff(phi, axis=0) / np.diff(x)[:, None]
    p = 1.0 - alpha
    out = np.empty((x.size - 1, phi.shape[1]))
    for i in range(1, x.size):
        w = (x[i] - x[:i]) ** p - (x[i] - x[1 : i + 1]) ** p
        out[i - 1] = w @ slope[:i]
    return SampledPath(path.grid, out / gamma(2.0 - alpha), offset=1)


def residual_start_index(N: int) -> int:
    """First node included in the residual; skips the initial layer."""
    return max(1, math.ceil(0.05 * N))


def fpdvi_residual(problem, traj) -> float:
    """Max over nodes i >= ceil(0.05 N) of the pointwise defect of the state equation.

    The time derivative is the L1 Caputo approximation for alpha < 1 and the
    backward difference for alpha = 1.
    """
    grid = traj.grid
    if abs(grid.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise GridMismatch(f"trajectory horizon {grid.T} differs from problem horizon {problem.T}")
    theta = np.asarray(traj.theta, dtype=float)
    u = np.asarray(traj.u, dtype=float)
    if theta.shape[0] != grid.nodes.size or u.shape[0] != grid.nodes.size:
        raise GridMismatch("trajectory samples do not match its grid")

    if problem.alpha < 1.0:
        d = caputo_derivative(problem.alpha, SampledPath(grid, theta)).values
    else:
        d = np.diff(theta, axis=0) / grid.steps[:, None]

    x = grid.nodes
    A = problem.A.entries
    start = residual_start_index(grid.N)
    idx = np.arange(start, x.size)
    rhs = theta[idx] @ A.T
    Bu = np.einsum("kij,kj->ki", problem.B.evaluate(x[idx], theta[idx]), u[idx])
    rhs = rhs + Bu + problem.f.evaluate(x[idx], theta[idx])
    defect = d[idx - 1] - rhs
    return float(np.max(np.linalg.norm(defect, axis=1)))
