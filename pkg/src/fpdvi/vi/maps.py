"""Monotone single-valued maps G: R^m -> R^m."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import DimensionMismatch, NonMonotoneDetected

__all__ = ["MonotoneMap", "Affine", "CallableMap", "Shifted"]


class MonotoneMap:
    dim: int
    lipschitz: float

    def __call__(self, u) -> np.ndarray:
        """Evaluate on one vector or on stacked rows."""
        raise NotImplementedError

    def shifted(self, eps: float) -> MonotoneMap:
        """The map u -> G(u) + eps*u."""
        return Shifted(self, eps)

    def _check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected vectors of length {self.dim}, got shape {u.shape}")
        return u


class Affine(MonotoneMap):
    """G(u) = M u + q with M + M' positive semidefinite."""

    def __init__(self, M, q=None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise DimensionMismatch("M must be square")
        q = np.zeros(M.shape[0]) if q is None else np.atleast_1d(np.asarray(q, dtype=float))
        if q.size != M.shape[0]:
            raise DimensionMismatch("q must match M")
        if np.linalg.eigvalsh(0.5 * (M + M.T)).min() < -1e-10:
            raise NonMonotoneDetected("affine map is not monotone: M + M' has a negative eigenvalue")
        self.M, self.q = M, q
        self.dim = M.shape[0]
        self.lipschitz = float(np.linalg.norm(M, 2))

    def __call__(self, u):
        return self._check(u) @ self.M.T + self.q

    def __repr__(self) -> str:
        return f"Affine(M={self.M.tolist()}, q={self.q.tolist()})"


class CallableMap(MonotoneMap):
    """Black-box map, probed for monotonicity on random pairs when constructed.

    ``fn`` maps a vector to a vector; a vectorised ``fn`` accepting stacked rows
    can be flagged with ``vectorized=True``. ``verify=False`` skips the
    rejection (used when probing suspect maps).
    """

    def __init__(
        self,
        fn: Callable,
        dim: int,
        lipschitz: float | None = None,
        vectorized: bool = False,
        probe_radius: float = 10.0,
        probe_pairs: int = 200,
        seed: int = 0,
        verify: bool = True,
    ):
        self.fn = fn
        self.dim = int(dim)
        self.vectorized = vectorized
        rng = np.random.default_rng(seed)
        u = probe_radius * (2.0 * rng.random((probe_pairs, self.dim)) - 1.0)
        v = probe_radius * (2.0 * rng.random((probe_pairs, self.dim)) - 1.0)
        gu, gv = self(u), self(v)
        inner = np.einsum("ij,ij->i", gv - gu, v - u)
        if verify and inner.min() < -1e-10:
            raise NonMonotoneDetected(
                f"sampled monotonicity violated: <G(v)-G(u), v-u> = {inner.min():.3g}"
            )
        if lipschitz is None:
            quot = np.linalg.norm(gv - gu, axis=1) / np.linalg.norm(v - u, axis=1)
            lipschitz = float(quot.max())
        self.lipschitz = float(lipschitz)

    def __call__(self, u):
        u = self._check(u)
        if u.ndim == 1:
            return np.asarray(self.fn(u), dtype=float).reshape(self.dim)
        if self.vectorized:
            return np.asarray(self.fn(u), dtype=float).reshape(u.shape)
        return np.stack([np.asarray(self.fn(r), dtype=float) for r in u]).reshape(u.shape)

    def __repr__(self) -> str:
        return f"CallableMap({getattr(self.fn, '__name__', 'fn')}, dim={self.dim})"


class Shifted(MonotoneMap):
    def __init__(self, base: MonotoneMap, eps: float):
        self.base, self.eps = base, float(eps)
        self.dim = base.dim
        self.lipschitz = base.lipschitz + abs(self.eps)

    def __call__(self, u):
        u = self._check(u)
        return self.base(u) + self.eps * u
