"""Coupling maps of the evolution problem.

State maps ``(xi, theta) -> array`` realise B (matrix valued), f and g
(vector valued). Nonlocal maps ``(grid, theta path) -> vector`` realise the
initial condition theta(0) = h(theta).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "StateMap",
    "ConstantMap",
    "AffineMap",
    "FunctionMap",
    "NonlocalMap",
    "ConstantNonlocal",
    "LinearPointsNonlocal",
    "FunctionNonlocal",
]


class StateMap:
    """Map (xi, theta) -> array of fixed ``shape``."""

    shape: tuple[int, ...]
    #: True when the value does not depend on theta
    state_independent: bool = False

    def __call__(self, xi: float, theta) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, xis, thetas) -> np.ndarray:
        """Values at paired samples; result has shape (k, *self.shape)."""
        xis = np.asarray(xis, dtype=float).ravel()
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if thetas.shape[0] != xis.size:
            raise DimensionMismatch("need one state per time sample")
        out = np.empty((xis.size,) + self.shape)
        for k in range(xis.size):
            out[k] = self(xis[k], thetas[k])
        return out


class ConstantMap(StateMap):
    state_independent = True

    def __init__(self, value):
        self.value = np.array(value, dtype=float)
        self.shape = self.value.shape

    def __call__(self, xi, theta):
        return self.value.copy()

    def evaluate(self, xis, thetas):
        k = np.asarray(xis).size
        return np.broadcast_to(self.value, (k,) + self.shape).copy()

    def __repr__(self) -> str:
        return f"ConstantMap({self.value.tolist()})"


class AffineMap(StateMap):
    """value = const + linear . theta, with ``linear`` of shape (*shape, n)."""

    def __init__(self, const, linear):
        self.const = np.array(const, dtype=float)
        self.linear = np.array(linear, dtype=float)
        if self.linear.shape[:-1] != self.const.shape:
            raise DimensionMismatch("affine map: linear part must have shape (*const.shape, n)")
        self.shape = self.const.shape
        self.state_dim = self.linear.shape[-1]
        self.state_independent = not np.any(self.linear)

    def __call__(self, xi, theta):
        return self.const + self.linear @ np.asarray(theta, dtype=float)

    def evaluate(self, xis, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return self.const + np.einsum("...j,kj->k...", self.linear, thetas)

    def __repr__(self) -> str:
        return f"AffineMap(const={self.const.tolist()}, linear={self.linear.tolist()})"


class FunctionMap(StateMap):
    """Wraps a Python callable ``fn(xi, theta)``."""

    def __init__(self, fn: Callable, shape, state_independent: bool = False):
        self.fn = fn
        self.shape = tuple(int(s) for s in np.atleast_1d(shape)) if shape != () else ()
        self.state_independent = state_independent

    def __call__(self, xi, theta):
        return np.asarray(self.fn(float(xi), np.asarray(theta, dtype=float)), dtype=float).reshape(
            self.shape
        )


class NonlocalMap:
    """Map from a whole sampled path to an initial state."""

    dim: int

    def __call__(self, grid, theta) -> np.ndarray:
        raise NotImplementedError


class ConstantNonlocal(NonlocalMap):
    def __init__(self, value):
        self.value = np.atleast_1d(np.asarray(value, dtype=float))
        self.dim = self.value.size

    def __call__(self, grid, theta):
        return self.value.copy()

    def __repr__(self) -> str:
        return f"ConstantNonlocal({self.value.tolist()})"


class LinearPointsNonlocal(NonlocalMap):
    """h(theta) = c + sum_k M_k theta(t_k), theta linearly interpolated between nodes."""

    def __init__(self, const, points):
        self.const = np.atleast_1d(np.asarray(const, dtype=float))
        self.dim = self.const.size
        self.points = []
        for t, M in points:
            M = np.atleast_2d(np.asarray(M, dtype=float))
            if M.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"point weight must be {self.dim}x{self.dim}")
            if t < 0:
                raise ValueError("evaluation times must be nonnegative")
            self.points.append((float(t), M))

    def __call__(self, grid, theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        x = grid.nodes
        out = self.const.copy()
        for t, M in self.points:
            if t > x[-1] * (1 + 1e-12):
                raise ValueError(f"evaluation time {t} lies beyond the horizon {x[-1]}")
            val = np.array([np.interp(t, x, theta[:, c]) for c in range(theta.shape[1])])
            out = out + M @ val
        return out

    def __repr__(self) -> str:
        return f"LinearPointsNonlocal({self.const.tolist()}, {[(t, M.tolist()) for t, M in self.points]})"


class FunctionNonlocal(NonlocalMap):
    def __init__(self, fn: Callable, dim: int):
        self.fn = fn
        self.dim = int(dim)

    def __call__(self, grid, theta):
        return np.asarray(self.fn(grid, theta), dtype=float).reshape(self.dim)
