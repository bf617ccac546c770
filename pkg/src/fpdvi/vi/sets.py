"""Closed convex sets with Euclidean projections."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, InfeasibleSet

__all__ = ["ConvexSet", "Box", "Ball", "HalfspaceIntersection", "project", "UNBOUNDED"]

# box bounds at or beyond this magnitude stand in for an unbounded coordinate
UNBOUNDED = 1.0e9


class ConvexSet:
    """Base class; subclasses provide ``project`` for row-stacked points."""

    dim: int

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.linalg.norm(np.atleast_2d(self.project(x) - x), axis=-1) <= tol))

    @property
    def bounded(self) -> bool:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int, radius: float = 10.0) -> np.ndarray:
        """Points of K (K intersected with a ball of ``radius`` about the origin when unbounded)."""
        raise NotImplementedError

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected vectors of length {self.dim}, got shape {x.shape}")
        return x


class Box(ConvexSet):
    def __init__(self, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("box bounds must be vectors of equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box needs lower <= upper componentwise")
        self.lower, self.upper = lo, hi
        self.dim = lo.size

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.abs(self.lower) < UNBOUNDED) and np.all(np.abs(self.upper) < UNBOUNDED))

    @property
    def unbounded_surrogate(self) -> bool:
        """Every coordinate is effectively free."""
        return bool(np.all(self.lower <= -UNBOUNDED) and np.all(self.upper >= UNBOUNDED))

    def sample(self, rng, count, radius=10.0):
        lo = np.maximum(self.lower, -radius)
        hi = np.minimum(self.upper, radius)
        hi = np.maximum(hi, lo)
        return lo + (hi - lo) * rng.random((count, self.dim))

    def __repr__(self) -> str:
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(ConvexSet):
    def __init__(self, center, radius: float):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if c.ndim != 1:
            raise DimensionMismatch("ball center must be a vector")
        if not radius > 0:
            raise ValueError(f"ball radius must be positive, got {radius!r}")
        self.center, self.radius = c, float(radius)
        self.dim = c.size

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
        return self.center + d * scale

    @property
    def bounded(self) -> bool:
        return True

    def sample(self, rng, count, radius=10.0):
        return self.center + self.radius * _uniform_ball(rng, count, self.dim)

    def __repr__(self) -> str:
        return f"Ball({self.center.tolist()}, {self.radius})"


def _uniform_ball(rng, count, dim):
    d = rng.standard_normal((count, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * rng.random((count, 1)) ** (1.0 / dim)


class HalfspaceIntersection(ConvexSet):
    """{u : a_i . u <= b_i}, certified nonempty by ``interior_point``.

    Projection is by Dykstra's alternating projections onto the halfspaces.
    """

    def __init__(self, normals, offsets, interior_point, max_sweeps: int = 20000):
        a = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.atleast_1d(np.asarray(offsets, dtype=float))
        p = np.atleast_1d(np.asarray(interior_point, dtype=float))
        if a.shape[0] != b.size or a.shape[1] != p.size:
            raise DimensionMismatch("halfspace normals, offsets and interior point disagree")
        nrm = np.linalg.norm(a, axis=1)
        if np.any(nrm == 0):
            raise ValueError("halfspace normals must be nonzero")
        if np.any(a @ p > b + 1e-12 * np.maximum(1.0, np.abs(b))):
            raise InfeasibleSet("supplied interior point violates a halfspace")
        self.normals, self.offsets, self.interior_point = a, b, p
        self.dim = p.size
        self.max_sweeps = int(max_sweeps)
        self._unit = a / nrm[:, None]
        self._bunit = b / nrm
        self._bbox = None

    def violation(self, x: np.ndarray) -> np.ndarray:
        return np.max(np.atleast_2d(x) @ self._unit.T - self._bunit, axis=-1).clip(min=0.0)

    def _project_one(self, x: np.ndarray) -> np.ndarray:
        a, b = self._unit, self._bunit
        if np.all(a @ x <= b):
            return x.copy()
        k = a.shape[0]
        y = x.copy()
        incr = np.zeros((k, self.dim))
        for _ in range(self.max_sweeps):
            y_old = y.copy()
            for i in range(k):
                z = y + incr[i]
                s = a[i] @ z - b[i]
                y = z - max(s, 0.0) * a[i]
                incr[i] = z - y
            viol = float(np.max(a @ y - b, initial=0.0))
            if viol <= 1e-12 and np.max(np.abs(y - y_old)) <= 1e-14 * max(1.0, np.max(np.abs(y))):
                return y
        if float(np.max(a @ y - b, initial=0.0)) > 1e-9:
            raise InfeasibleSet("Dykstra projection stalled above residual 1e-9")
        return y

    def project(self, x):
        x = self._check(x)
        if x.ndim == 1:
            return self._project_one(x)
        return np.stack([self._project_one(r) for r in x.reshape(-1, self.dim)]).reshape(x.shape)

    def bounding_box(self):
        """Coordinate bounds from linear programs; infinite where unbounded."""
        if self._bbox is None:
            from scipy.optimize import linprog

            lo = np.full(self.dim, -np.inf)
            hi = np.full(self.dim, np.inf)
            for i in range(self.dim):
                for sign in (1.0, -1.0):
                    c = np.zeros(self.dim)
                    c[i] = sign
                    res = linprog(
                        c, A_ub=self.normals, b_ub=self.offsets, bounds=[(None, None)] * self.dim
                    )
                    if res.status == 0:
                        if sign > 0:
                            lo[i] = res.fun
                        else:
                            hi[i] = -res.fun
            self._bbox = (lo, hi)
        return self._bbox

    @property
    def bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def sample(self, rng, count, radius=10.0):
        lo, hi = self.bounding_box()
        lo = np.maximum(lo, self.interior_point - radius)
        hi = np.minimum(hi, self.interior_point + radius)
        out = np.empty((count, self.dim))
        filled = 0
        for _ in range(50):
            cand = lo + (hi - lo) * rng.random((4 * count, self.dim))
            cand = cand[np.all(cand @ self.normals.T <= self.offsets, axis=1)]
            take = min(cand.shape[0], count - filled)
            out[filled : filled + take] = cand[:take]
            filled += take
            if filled == count:
                return out
        # thin sets: fall back to projected box samples
        rest = lo + (hi - lo) * rng.random((count - filled, self.dim))
        out[filled:] = self.project(rest)
        return out

    def __repr__(self) -> str:
        return f"HalfspaceIntersection({self.normals.shape[0]} halfspaces, dim={self.dim})"


def project(K: ConvexSet, x) -> np.ndarray:
    """Euclidean projection of ``x`` (one vector or stacked rows) onto ``K``."""
    return K.project(x)
