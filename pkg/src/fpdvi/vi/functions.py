"""Proper convex functions with closed-form proximal maps.

``prox(phi, lam, x)`` accepts a scalar ``lam`` or one step per row of ``x``.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, UnsupportedVariant

__all__ = [
    "ConvexFunction",
    "Zero",
    "WeightedL1",
    "Quadratic",
    "SeparablePiecewiseLinear",
    "prox",
]


def _lam(lam, x: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("prox step must be positive")
    if lam.ndim == 1 and x.ndim == 2:
        lam = lam[:, None]
    return lam


class ConvexFunction:
    #: coordinatewise sum of 1-D functions; prox then commutes with box clamping
    separable: bool = True
    dim: int | None = None

    def __call__(self, x) -> np.ndarray | float:
        raise NotImplementedError

    def prox(self, lam, x) -> np.ndarray:
        raise UnsupportedVariant(f"{type(self).__name__} has no proximal rule")

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim is not None and x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected vectors of length {self.dim}, got shape {x.shape}")
        return x


class Zero(ConvexFunction):
    def __init__(self, dim: int | None = None):
        self.dim = dim

    def __call__(self, x):
        x = self._check(x)
        return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0

    def prox(self, lam, x):
        x = self._check(x)
        _lam(lam, x)
        return x.copy()

    def __repr__(self) -> str:
        return "Zero()"


class WeightedL1(ConvexFunction):
    """sum_i w_i |x_i| with w_i >= 0."""

    def __init__(self, weights):
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("l1 weights must be finite and nonnegative")
        self.weights = w
        self.dim = w.size

    def __call__(self, x):
        return np.abs(self._check(x)) @ self.weights

    def prox(self, lam, x):
        x = self._check(x)
        t = _lam(lam, x) * self.weights
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    def __repr__(self) -> str:
        return f"WeightedL1({self.weights.tolist()})"


class Quadratic(ConvexFunction):
    """0.5 x'Px + r'x with P symmetric positive semidefinite."""

    def __init__(self, P, r=None):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape[0] != P.shape[1]:
            raise DimensionMismatch("P must be square")
        P = 0.5 * (P + P.T)
        if np.linalg.eigvalsh(P).min() < -1e-10:
            raise ValueError("P must be positive semidefinite")
        self.P = P
        self.r = np.zeros(P.shape[0]) if r is None else np.asarray(r, dtype=float).ravel()
        if self.r.size != P.shape[0]:
            raise DimensionMismatch("r must match P")
        self.dim = P.shape[0]
        self.separable = bool(np.count_nonzero(P - np.diag(np.diag(P))) == 0)

    def __call__(self, x):
        x = self._check(x)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.P, x) + x @ self.r

    def prox(self, lam, x):
        x = self._check(x)
        lam = _lam(lam, x)
        if self.separable:
            return (x - lam * self.r) / (1.0 + lam * np.diag(self.P))
        eye = np.eye(self.dim)
        if np.ndim(lam) == 0:
            return np.linalg.solve(eye + lam * self.P, (x - lam * self.r).T).T
        lam = np.broadcast_to(lam, x.shape[:-1] + (1,))
        mats = eye + lam[..., None] * self.P
        return np.linalg.solve(mats, (x - lam * self.r)[..., None])[..., 0]

    def __repr__(self) -> str:
        return f"Quadratic(P={self.P.tolist()}, r={self.r.tolist()})"


class SeparablePiecewiseLinear(ConvexFunction):
    """sum_i psi(x_i), psi convex piecewise linear with shared breakpoints.

    ``psi(t) = slopes[0] * t + sum_k (slopes[k+1] - slopes[k]) * max(t - breakpoints[k], 0)``,
    so ``psi(0)`` is not normalised; slopes must be nondecreasing.
    """

    def __init__(self, breakpoints, slopes, dim: int | None = None):
        b = np.atleast_1d(np.asarray(breakpoints, dtype=float))
        s = np.atleast_1d(np.asarray(slopes, dtype=float))
        if s.size != b.size + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must increase strictly")
        if np.any(np.diff(s) < 0):
            raise ValueError("slopes must be nondecreasing for convexity")
        self.breakpoints, self.slopes = b, s
        self.dim = dim

    def _psi(self, t):
        out = self.slopes[0] * t
        for k, bk in enumerate(self.breakpoints):
            out = out + (self.slopes[k + 1] - self.slopes[k]) * np.maximum(t - bk, 0.0)
        return out

    def __call__(self, x):
        return np.sum(self._psi(self._check(x)), axis=-1)

    def prox(self, lam, x):
        # y + lam*psi'(y) is increasing; invert it piece by piece
        x = self._check(x)
        lam = np.broadcast_to(_lam(lam, x), x.shape)
        b, s = self.breakpoints, self.slopes
        out = np.empty_like(x)
        flat_x, flat_l, flat_o = x.ravel(), lam.ravel(), out.ravel()
        for idx in range(flat_x.size):
            xi, li = flat_x[idx], flat_l[idx]
            lo = b + li * s[:-1]  # left edge of the flat piece at b_k
            hi = b + li * s[1:]
            k = int(np.searchsorted(lo, xi, side="right"))  # number of breakpoints with lo <= x
            if k > 0 and xi <= hi[k - 1]:
                flat_o[idx] = b[k - 1]
            else:
                flat_o[idx] = xi - li * s[k]
        return out

    def __repr__(self) -> str:
        return f"SeparablePiecewiseLinear({self.breakpoints.tolist()}, {self.slopes.tolist()})"


def prox(phi: ConvexFunction, lam, x) -> np.ndarray:
    """argmin_y phi(y) + |y - x|^2 / (2 lam)."""
    return phi.prox(lam, x)
