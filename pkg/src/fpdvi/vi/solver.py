"""Mixed variational inequalities: find u in K with
<w + G(u), v - u> + phi(v) - phi(u) >= 0 for all v in K.

The resolvent of phi + indicator(K) is taken as ``project(K, prox(phi, lam, .))``,
which is exact for the supported pairings: phi zero with any K, separable phi
with a box, and anything with the unbounded box surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, MaxIterExceeded, NonMonotoneDetected, UnsupportedCombination
from .functions import ConvexFunction, Zero
from .maps import MonotoneMap
from .sets import Box, ConvexSet

__all__ = [
    "VIProblem",
    "check_combination",
    "resolvent",
    "natural_residual",
    "solve_vi",
    "solve_vi_batch",
    "select_control",
    "select_controls",
    "sol_bound",
    "TIKHONOV_EPS",
]

TIKHONOV_EPS = 1.0e-8
_LAM_MIN = 1.0e-12
_ARMIJO = 0.9


def check_combination(K: ConvexSet, phi: ConvexFunction) -> None:
    """Reject pairings for which project(prox(.)) is not the resolvent of phi + i_K."""
    if isinstance(phi, Zero):
        return
    if isinstance(K, Box):
        if K.unbounded_surrogate or phi.separable:
            return
    raise UnsupportedCombination(
        f"{type(phi).__name__} with {type(K).__name__}: composite resolvent does not factor"
    )


@dataclass(frozen=True, eq=False)
class VIProblem:
    K: ConvexSet
    w: np.ndarray
    G: MonotoneMap
    phi: ConvexFunction

    def __post_init__(self) -> None:
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        m = self.K.dim
        if w.shape != (m,) or self.G.dim != m or (self.phi.dim not in (None, m)):
            raise DimensionMismatch(
                f"VI data disagree: K dim {m}, w {w.shape}, G dim {self.G.dim}, phi dim {self.phi.dim}"
            )
        check_combination(self.K, self.phi)
        object.__setattr__(self, "w", w)


def resolvent(K: ConvexSet, phi: ConvexFunction, lam, x) -> np.ndarray:
    return K.project(phi.prox(lam, x))


def _residual_rows(K, G, phi, W, U, GU=None) -> np.ndarray:
    GU = G(U) if GU is None else GU
    return np.linalg.norm(U - resolvent(K, phi, 1.0, U - (W + GU)), axis=-1)


def natural_residual(p: VIProblem, u) -> float:
    """|u - R(u - (w + G(u)))| with the reference step 1."""
    u = np.asarray(u, dtype=float)
    if u.shape != (p.K.dim,):
        raise DimensionMismatch(f"u must have shape ({p.K.dim},), got {u.shape}")
    return float(_residual_rows(p.K, p.G, p.phi, p.w[None], u[None])[0])


def _extragradient(K, G, phi, W, U0, tol, max_iter):
    """Row-wise extragradient with backtracking; returns (U, residuals, iterations)."""
    U = np.array(U0, dtype=float)
    GU = G(U)
    lam = np.full(U.shape[0], 1.0 / max(G.lipschitz, 1.0))
    res = _residual_rows(K, G, phi, W, U, GU)
    active = res > tol
    it = 0
    while np.any(active):
        if it >= max_iter:
            raise MaxIterExceeded(
                f"extragradient did not reach {tol:g} in {max_iter} iterations "
                f"(residual {res.max():.3g})",
                u=U,
                residual=res,
                iterations=it,
            )
        it += 1
        idx = np.flatnonzero(active)
        u, gu, w, lv = U[idx], GU[idx], W[idx], lam[idx].copy()
        uh = resolvent(K, phi, lv, u - lv[:, None] * (w + gu))
        gh = G(uh)
        while True:
            bad = lv * np.linalg.norm(gh - gu, axis=1) > _ARMIJO * np.linalg.norm(uh - u, axis=1)
            if not np.any(bad):
                break
            lv[bad] *= 0.5
            if np.any(lv < _LAM_MIN):
                raise NonMonotoneDetected("step size fell below 1e-12 during backtracking")
            b = np.flatnonzero(bad)
            uh[b] = resolvent(K, phi, lv[b], u[b] - lv[b, None] * (w[b] + gu[b]))
            gh[b] = G(uh[b])
        un = resolvent(K, phi, lv, u - lv[:, None] * (w + gh))
        gn = G(un)
        U[idx], GU[idx], lam[idx] = un, gn, lv
        res[idx] = _residual_rows(K, G, phi, w, un, gn)
        active = res > tol
    return U, res, it


def _rows(K, values) -> np.ndarray:
    W = np.atleast_2d(np.asarray(values, dtype=float))
    if W.shape[-1] != K.dim:
        raise DimensionMismatch(f"expected vectors of length {K.dim}, got shape {W.shape}")
    return W


def solve_vi(p: VIProblem, tol: float = 1e-10, max_iter: int = 20000, u0=None):
    """Extragradient solve of one VI; returns (u, natural residual, iterations)."""
    if not tol >= 1e-14:
        raise ValueError("tol must be >= 1e-14")
    start = p.K.project(np.zeros(p.K.dim)) if u0 is None else np.asarray(u0, dtype=float)
    try:
        U, res, it = _extragradient(p.K, p.G, p.phi, p.w[None], start[None], tol, max_iter)
    except MaxIterExceeded as exc:
        raise MaxIterExceeded(str(exc), u=exc.u[0], residual=float(exc.residual[0]),
                              iterations=exc.iterations) from None
    return U[0], float(res[0]), it


def solve_vi_batch(K, G, phi, W, tol: float = 1e-10, max_iter: int = 20000, U0=None):
    """Solve one VI per row of ``W`` sharing (K, G, phi)."""
    check_combination(K, phi)
    W = _rows(K, W)
    if U0 is None:
        U0 = np.broadcast_to(K.project(np.zeros(K.dim)), W.shape)
    return _extragradient(K, G, phi, W, U0, tol, max_iter)


def select_controls(
    K, G, phi, g_values, tol: float = 1e-10, max_iter: int = 20000, tikhonov_iter: int = 2000
):
    """Deterministic selection from the solution set for each row of ``g_values``.

    Solves the problem with G + 1e-8 I (unique solution, close to the minimal-norm
    element) from P_K(0), then polishes with the original G. Returns (U, residuals).
    """
    check_combination(K, phi)
    W = _rows(K, g_values)
    U0 = np.broadcast_to(K.project(np.zeros(K.dim)), W.shape)
    try:
        U, _, _ = _extragradient(K, G.shifted(TIKHONOV_EPS), phi, W, U0, tol, tikhonov_iter)
    except MaxIterExceeded as exc:
        U = exc.u
    U, res, _ = _extragradient(K, G, phi, W, U, tol, max_iter)
    return U, res


def select_control(K, G, phi, g_value, tol: float = 1e-10, max_iter: int = 20000) -> np.ndarray:
    """Single-vector form of :func:`select_controls`."""
    U, _ = select_controls(K, G, phi, np.asarray(g_value, dtype=float)[None], tol, max_iter)
    return U[0]


def sol_bound(K, G, phi, n: float, sample_count: int, seed: int = 0, tol: float = 1e-10) -> float:
    """Empirical bound: max |select_control(w)| over w drawn uniformly from the n-ball.

    Draws are generated one at a time from ``seed`` so a larger sample_count
    extends, and never replaces, a smaller one.
    """
    if not n > 0:
        raise ValueError("n must be positive")
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    rng = np.random.default_rng(seed)
    m = K.dim
    W = np.empty((sample_count, m))
    for i in range(sample_count):
        d = rng.standard_normal(m)
        W[i] = n * rng.random() ** (1.0 / m) * d / np.linalg.norm(d)
    U, _ = select_controls(K, G, phi, W, tol)
    return float(np.max(np.linalg.norm(U, axis=1)))
