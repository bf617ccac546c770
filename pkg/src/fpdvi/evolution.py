"""Discrete mild solutions of the fractional evolution problem with VI controls.

The mild solution satisfies

    theta(xi) = E_a(xi^a A) h(theta)
                + int_0^xi (xi - s)^(a-1) E_{a,a}((xi - s)^a A) (B u + f)(s) ds,

with u(s) selected from the solution set of the VI with shift g(s, theta(s)).
The integral is discretised by product integration: the integrand's smooth
factor is frozen at subinterval midpoints and the kernel (xi - s)^(a-1) is
integrated exactly, giving weights ((xi_i - xi_j)^a - (xi_i - xi_{j+1})^a) / a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatch, GridMismatch, InvalidOrder, MaxOuterExceeded
from .fracops import SampledPath, TimeGrid, fpdvi_residual
from .maps import NonlocalMap, StateMap
from .mittag_leffler import GeneratorMatrix, MLParams, ml_matrix_batch
from .vi import ConvexFunction, ConvexSet, MonotoneMap, check_combination, select_controls

__all__ = [
    "FPDVIProblem",
    "Trajectory",
    "OperatorFamilyTable",
    "SolveReport",
    "OrderStudy",
    "build_tables",
    "apply_gamma",
    "solve_fpdvi",
    "refine_and_estimate_order",
]

DAMPING_MIN = 1.0 / 16.0
_GROWTH_STREAK = 3


@dataclass(frozen=True, eq=False)
class FPDVIProblem:
    alpha: float
    T: float
    A: GeneratorMatrix
    B: StateMap
    f: StateMap
    g: StateMap
    h: NonlocalMap
    K: ConvexSet
    G: MonotoneMap
    phi: ConvexFunction
    probe_radius: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidOrder(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T!r}")
        A = self.A if isinstance(self.A, GeneratorMatrix) else GeneratorMatrix(self.A, alpha=self.alpha)
        object.__setattr__(self, "A", A)
        n, m = A.n, self.K.dim
        if self.B.shape != (n, m):
            raise DimensionMismatch(f"B must return {n}x{m} matrices, returns {self.B.shape}")
        if self.f.shape != (n,):
            raise DimensionMismatch(f"f must return {n}-vectors, returns {self.f.shape}")
        if self.g.shape != (m,):
            raise DimensionMismatch(f"g must return {m}-vectors, returns {self.g.shape}")
        if self.h.dim != n:
            raise DimensionMismatch(f"h must return {n}-vectors, returns {self.h.dim}")
        if self.G.dim != m or self.phi.dim not in (None, m):
            raise DimensionMismatch("VI data must act on the control dimension")
        check_combination(self.K, self.phi)
        self._probe()

    def _probe(self) -> None:
        """B, f, g must be finite on [0, T] x ball(0, probe_radius)."""
        rng = np.random.default_rng(0)
        n = self.n
        xs = np.concatenate([[0.0, self.T], self.T * rng.random(14)])
        th = rng.standard_normal((xs.size, n))
        th *= self.probe_radius * rng.random((xs.size, 1)) / np.linalg.norm(th, axis=1, keepdims=True)
        th[0] = 0.0
        for name in ("B", "f", "g"):
            vals = getattr(self, name).evaluate(xs, th)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"{name} is not finite on the probe domain")

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def m(self) -> int:
        return self.K.dim

    @property
    def params(self) -> MLParams:
        return MLParams(self.alpha, 1.0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    grid: TimeGrid
    theta: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        th = np.atleast_2d(np.asarray(self.theta, dtype=float))
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        if th.shape[0] != self.grid.nodes.size or u.shape[0] != self.grid.nodes.size:
            raise DimensionMismatch("trajectory needs one state and one control per node")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "u", u)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.nodes

    def states(self) -> SampledPath:
        return SampledPath(self.grid, self.theta)


# {{{ operator tables


@dataclass(eq=False)
class OperatorFamilyTable:
    """E1[i] = E_a(xi_i^a A); kernel(i) stacks w_ij E_{a,a}((xi_i - s_j)^a A) for j < i.

    On a uniform grid the midpoint differences are (d + 1/2) Delta and
    ``E2[d]`` holds the matrices for d = 0..N-1; graded grids evaluate rows on
    demand with a cache keyed by the rounded difference.
    """

    grid: TimeGrid
    alpha: float
    E1: np.ndarray
    E2: np.ndarray | None
    uniform_weights: np.ndarray | None
    A: GeneratorMatrix
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def uniform(self) -> bool:
        return self.E2 is not None

    def weights(self, i: int) -> np.ndarray:
        """w_ij for j = 0..i-1."""
        x = self.grid.nodes
        a = self.alpha
        return ((x[i] - x[:i]) ** a - (x[i] - x[1 : i + 1]) ** a) / a

    def midpoint_matrices(self, i: int) -> np.ndarray:
        """E_{a,a}((xi_i - s_j)^a A) for j = 0..i-1."""
        if self.uniform:
            return self.E2[:i][::-1]
        x = self.grid.nodes
        d = x[i] - 0.5 * (x[:i] + x[1 : i + 1])
        keys = np.round(d, 14)
        missing = [k for k in dict.fromkeys(keys.tolist()) if k not in self._cache]
        if missing:
            mats = ml_matrix_batch(MLParams(self.alpha, self.alpha), np.asarray(missing) ** self.alpha, self.A)
            self._cache.update(zip(missing, mats))
        return np.stack([self._cache[k] for k in keys.tolist()])


def build_tables(problem: FPDVIProblem, grid: TimeGrid) -> OperatorFamilyTable:
    if abs(grid.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise GridMismatch(f"grid horizon {grid.T} differs from problem horizon {problem.T}")
    a = problem.alpha
    x = grid.nodes
    E1 = ml_matrix_batch(MLParams(a, 1.0), x**a, problem.A)
    E2 = uw = None
    if grid.kind == "uniform":
        N = grid.N
        delta = grid.T / N
        d = np.arange(N, dtype=float)
        E2 = ml_matrix_batch(MLParams(a, a), ((d + 0.5) * delta) ** a, problem.A)
        uw = delta**a * ((d + 1.0) ** a - d**a) / a
    return OperatorFamilyTable(grid, a, E1, E2, uw, problem.A)


# }}}


def _forcing(problem: FPDVIProblem, grid: TimeGrid, theta: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(B u + f) at subinterval midpoints with averaged state and control."""
    x = grid.nodes
    s = 0.5 * (x[:-1] + x[1:])
    th = 0.5 * (theta[:-1] + theta[1:])
    um = 0.5 * (u[:-1] + u[1:])
    Bm = problem.B.evaluate(s, th)
    return np.einsum("kij,kj->ki", Bm, um) + problem.f.evaluate(s, th)


def _gamma_map(problem, tables: OperatorFamilyTable, theta, u) -> np.ndarray:
    grid = tables.grid
    n = problem.n
    h0 = problem.h(grid, theta)
    F = _forcing(problem, grid, theta, u)
    out = tables.E1 @ h0
    N = grid.N
    if tables.uniform:
        ker = tables.uniform_weights[:, None, None] * tables.E2  # (N, n, n)
        conv = fftconvolve(ker, F[:, None, :], axes=0)[:N]  # (N, n, n)
        out[1:] += conv.sum(axis=2)
    else:
        for i in range(1, N + 1):
            w = tables.weights(i)
            E = tables.midpoint_matrices(i)
            out[i] += np.einsum("j,jab,jb->a", w, E, F[:i])
    return out.reshape(N + 1, n)


def apply_gamma(problem: FPDVIProblem, tables: OperatorFamilyTable, traj: Trajectory) -> Trajectory:
    """One application of the mild-solution map; controls are carried through."""
    if not traj.grid.same_as(tables.grid):
        raise GridMismatch("trajectory and tables live on different grids")
    if traj.theta.shape[1] != problem.n or traj.u.shape[1] != problem.m:
        raise DimensionMismatch("trajectory dimensions do not match the problem")
    return Trajectory(traj.grid, _gamma_map(problem, tables, traj.theta, traj.u), traj.u.copy())


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    history: list[float]
    final_change: float
    fixed_point_residual: float
    fpdvi_residual: float
    vi_residual_max: float
    vi_residuals: np.ndarray
    damping: float
    damping_changes: list[tuple[int, float]]
    tol: float

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "history": [float(v) for v in self.history],
            "final_change": float(self.final_change),
            "fixed_point_residual": float(self.fixed_point_residual),
            "fpdvi_residual": float(self.fpdvi_residual),
            "vi_residual_max": float(self.vi_residual_max),
            "damping_final": float(self.damping),
            "damping_changes": [[int(k), float(d)] for k, d in self.damping_changes],
            "tol": float(self.tol),
        }


def _select(problem, grid, theta, vi_tol, vi_max_iter):
    W = problem.g.evaluate(grid.nodes, theta)
    return select_controls(problem.K, problem.G, problem.phi, W, vi_tol, vi_max_iter)


def solve_fpdvi(
    problem: FPDVIProblem,
    grid: TimeGrid,
    tol: float = 1e-8,
    max_outer: int = 200,
    damping: float = 1.0,
    vi_tol: float = 1e-10,
    vi_max_iter: int = 20000,
    tables: OperatorFamilyTable | None = None,
):
    """Picard iteration on the mild-solution map; returns (Trajectory, SolveReport).

    Start: the constant path h(0), followed by one uncounted application of the
    map. Each counted iteration reselects controls, applies the map and damps.
    Damping halves (down to 1/16) after three consecutive increases of the change.
    Raises :class:`MaxOuterExceeded` carrying the best iterate and its report.
    """
    if not tol >= 1e-12:
        raise ValueError("tol must be >= 1e-12")
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must lie in (0, 1]")
    if int(max_outer) != max_outer or max_outer < 1:
        raise ValueError("max_outer must be a positive integer")
    tables = tables or build_tables(problem, grid)
    if not tables.grid.same_as(grid):
        raise GridMismatch("tables were built on a different grid")

    n = problem.n
    zero = np.zeros((grid.nodes.size, n))
    theta = np.broadcast_to(problem.h(grid, zero), zero.shape).copy()
    u, _ = _select(problem, grid, theta, vi_tol, vi_max_iter)
    theta = _gamma_map(problem, tables, theta, u)

    history: list[float] = []
    changes: list[tuple[int, float]] = []
    streak = 0
    best = (math.inf, theta)
    converged = False
    k = 0
    for k in range(1, int(max_outer) + 1):
        u, _ = _select(problem, grid, theta, vi_tol, vi_max_iter)
        new = (1.0 - damping) * theta + damping * _gamma_map(problem, tables, theta, u)
        change = float(np.max(np.linalg.norm(new - theta, axis=1)))
        if history and change > history[-1]:
            streak += 1
        else:
            streak = 0
        history.append(change)
        if change < best[0]:
            best = (change, new)
        theta = new
        if not np.all(np.isfinite(theta)):
            break
        if change <= tol:
            converged = True
            break
        if streak >= _GROWTH_STREAK and damping > DAMPING_MIN:
            damping = max(0.5 * damping, DAMPING_MIN)
            changes.append((k, damping))
            streak = 0

    if not converged:
        theta = best[1]
    traj, report = _finish(problem, grid, tables, theta, converged, k, history, damping, changes,
                           tol, vi_tol, vi_max_iter)
    if not converged:
        raise MaxOuterExceeded(
            f"Picard iteration did not reach {tol:g} in {max_outer} iterations "
            f"(best change {best[0]:.3g})",
            trajectory=traj,
            report=report,
        )
    return traj, report


def _finish(problem, grid, tables, theta, converged, k, history, damping, changes, tol,
            vi_tol, vi_max_iter):
    try:
        u, vi_res = _select(problem, grid, theta, vi_tol, vi_max_iter)
    except Exception:
        if converged:
            raise
        u = np.broadcast_to(problem.K.project(np.zeros(problem.m)), (grid.nodes.size, problem.m)).copy()
        vi_res = np.full(grid.nodes.size, np.inf)
    traj = Trajectory(grid, theta, u)
    if np.all(np.isfinite(theta)):
        gam = _gamma_map(problem, tables, theta, u)
        fp = float(np.max(np.linalg.norm(gam - theta, axis=1)))
        res = fpdvi_residual(problem, traj)
    else:
        fp = res = math.inf
    report = SolveReport(
        converged=converged,
        iterations=k,
        history=history,
        final_change=history[-1] if history else math.nan,
        fixed_point_residual=fp,
        fpdvi_residual=res,
        vi_residual_max=float(np.max(vi_res)),
        vi_residuals=np.asarray(vi_res),
        damping=damping,
        damping_changes=changes,
        tol=tol,
    )
    return traj, report


@dataclass
class OrderStudy:
    Ns: list[int]
    errors: list[float]
    order: float | None

    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.Ns, self.errors))


def refine_and_estimate_order(
    problem: FPDVIProblem,
    base_N: int,
    levels: int,
    reference=None,
    reference_N: int = 8192,
    tol: float = 1e-10,
    noise_floor: float = 1e-12,
    **solve_kw,
) -> OrderStudy:
    """Sup-norm errors on N, 2N, 4N, ... and the least-squares log-log slope.

    ``reference`` maps an array of times to states (shape (k, n)); without it a
    uniform fine-grid solve with ``reference_N`` intervals serves as reference.
    The fit is skipped (order None) when every error sits below ``noise_floor``.
    """
    if levels < 3:
        raise ValueError("need at least 3 refinement levels")
    if reference is None:
        fine_grid = TimeGrid.uniform(problem.T, reference_N)
        fine, _ = solve_fpdvi(problem, fine_grid, tol=tol, **solve_kw)

        def reference(t):
            return np.stack([np.interp(t, fine_grid.nodes, fine.theta[:, c])
                             for c in range(problem.n)], axis=1)

    Ns, errs = [], []
    for lev in range(levels):
        N = base_N * 2**lev
        grid = TimeGrid.uniform(problem.T, N)
        traj, _ = solve_fpdvi(problem, grid, tol=tol, **solve_kw)
        ref = np.asarray(reference(grid.nodes), dtype=float).reshape(grid.nodes.size, problem.n)
        Ns.append(N)
        errs.append(float(np.max(np.linalg.norm(traj.theta - ref, axis=1))))
    errs_arr = np.array(errs)
    if np.all(errs_arr <= noise_floor):
        return OrderStudy(Ns, errs, None)
    slope = np.polyfit(np.log(Ns), np.log(np.maximum(errs_arr, 1e-300)), 1)[0]
    return OrderStudy(Ns, errs, float(-slope))
