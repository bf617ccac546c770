"""Numerical probes of the standing assumptions and the existence inequality.

Everything here is sampling based: a passing probe is evidence, not proof,
and every estimated constant is an empirical lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import AnchorNotInK, DeltaBelowResolution, NoFeasibleL
from .fracops import SampledPath, TimeGrid
from .mittag_leffler import GeneratorMatrix, MLParams, mittag_leffler, ml_matrix_batch
from .vi import sol_bound

__all__ = [
    "ProbeResult",
    "CoercivityProbe",
    "ThetaAEstimate",
    "Envelope",
    "GrowthData",
    "Condition43Result",
    "probe_p1_monotone",
    "probe_p2_convex",
    "probe_p3_coercive",
    "probe_p4_bounded",
    "estimate_theta_A",
    "check_condition_43",
    "select_weight_L",
    "weight_certificate",
    "verify_weight_certificate",
    "weighted_norm",
    "sup_norm",
    "chi_diagnostic",
    "estimate_growth",
    "run_hypotheses",
    "DEFAULT_K_SEQUENCE",
    "THETA_A_CAVEAT",
]

DEFAULT_K_SEQUENCE = (1e2, 1e3, 1e4, 1e6, 1e8)
MONOTONE_TOL = 1e-10

THETA_A_CAVEAT = (
    "Theta_A is infinite for alpha < 1 because the kernel (xi-s)^(alpha-1) E_{alpha,alpha}((xi-s)^alpha A) "
    "tends to I/Gamma(alpha) times a divergent power as s -> xi; the value used is the supremum over "
    "differences d >= delta, and the integrated alternative is reported alongside."
)


class ProbeResult(NamedTuple):
    passed: bool
    worst: float


class CoercivityProbe(NamedTuple):
    trend: list
    passed: bool
    vacuous: bool


# {{{ VI data probes


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def probe_p1_monotone(G, K, pair_count: int = 200, seed=0, radius: float = 10.0) -> ProbeResult:
    """min <G(v)-G(u), v-u> over sampled pairs in K; passes when >= -1e-10."""
    if pair_count < 100:
        raise ValueError("pair_count must be >= 100")
    rng = _rng(seed)
    u = K.sample(rng, pair_count, radius)
    v = K.sample(rng, pair_count, radius)
    worst = float(np.min(np.einsum("ij,ij->i", G(v) - G(u), v - u)))
    return ProbeResult(worst >= -MONOTONE_TOL, worst)


def probe_p2_convex(phi, K, sample_count: int = 200, seed=0, radius: float = 10.0) -> ProbeResult:
    """Convexity on random segments and nonexpansiveness of the prox.

    ``worst`` is the smallest slack of either inequality; passes when >= -1e-10.
    """
    rng = _rng(seed)
    m = K.dim
    x = K.sample(rng, sample_count, radius)
    y = K.sample(rng, sample_count, radius)
    t = rng.random((sample_count, 1))
    slack_conv = t[:, 0] * phi(x) + (1 - t[:, 0]) * phi(y) - phi(t * x + (1 - t) * y)
    a = radius * rng.standard_normal((sample_count, m))
    b = radius * rng.standard_normal((sample_count, m))
    lam = 10.0 ** rng.uniform(-2, 1, sample_count)
    pa, pb = phi.prox(lam, a), phi.prox(lam, b)
    slack_prox = np.linalg.norm(a - b, axis=1) + 1e-12 - np.linalg.norm(pa - pb, axis=1)
    slack = min(float(np.min(slack_conv)), float(np.min(slack_prox)))
    return ProbeResult(slack >= -MONOTONE_TOL, slack)


def probe_p3_coercive(
    G,
    phi,
    K,
    radii: Sequence[float],
    anchor=None,
    samples_per_radius: int = 64,
    seed=0,
) -> CoercivityProbe:
    """q(r) = min over sampled u in K with |u| = r of (<G(u), u - v*> + phi(u) - phi(v*)) / r.

    Passes when q increases strictly over the last three radii and q(r_max) > 0.
    Vacuously true on bounded K.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be an increasing sequence with at least 3 entries")
    if anchor is None:
        anchor = K.project(np.zeros(K.dim))
    anchor = np.asarray(anchor, dtype=float)
    if not K.contains(anchor):
        raise AnchorNotInK("coercivity anchor does not lie in K")
    if K.bounded:
        return CoercivityProbe([], True, True)
    rng = _rng(seed)
    trend = []
    for r in radii:
        d = rng.standard_normal((samples_per_radius, K.dim))
        u = r * d / np.linalg.norm(d, axis=1, keepdims=True)
        inside = np.linalg.norm(K.project(u) - u, axis=1) <= 1e-9 * max(1.0, r)
        u = u[inside]
        if u.shape[0] == 0:
            trend.append(math.nan)
            continue
        val = (np.einsum("ij,ij->i", G(u), u - anchor) + phi(u) - phi(anchor)) / r
        trend.append(float(np.min(val)))
    last = np.asarray(trend[-3:])
    passed = bool(np.all(np.isfinite(last)) and np.all(np.diff(last) > 0) and last[-1] > 0)
    return CoercivityProbe(trend, passed, False)


def probe_p4_bounded(g, T: float, n: int, radii=(1.0, 10.0, 100.0, 1000.0), sample_count: int = 100,
                     seed=0) -> ProbeResult:
    """sup |g| over growing state balls; passes when it saturates between the two largest radii.

    ``worst`` is the largest sampled |g|.
    """
    rng = _rng(seed)
    sups = []
    for r in radii:
        xs = T * rng.random(sample_count)
        d = rng.standard_normal((sample_count, n))
        th = r * d / np.linalg.norm(d, axis=1, keepdims=True)
        vals = g.evaluate(xs, th)
        if not np.all(np.isfinite(vals)):
            return ProbeResult(False, math.inf)
        sups.append(float(np.max(np.linalg.norm(vals, axis=1))))
    sups = np.maximum.accumulate(sups)
    passed = sups[-1] <= 1.01 * sups[-2] + 1e-12
    return ProbeResult(bool(passed), float(sups[-1]))


# }}}


# {{{ constants of the existence theorem


@dataclass(frozen=True)
class ThetaAEstimate:
    """Regularised sup of d^(alpha-1) |E_{alpha,alpha}(d^alpha A)| over d in [delta, T]."""

    value: float
    integrated: float
    delta: float
    argmax: float
    caveat: str

    def __float__(self) -> float:
        return self.value


def _kernel_norms(alpha, A, d) -> np.ndarray:
    mats = ml_matrix_batch(MLParams(alpha, alpha), d**alpha, A)
    return np.linalg.norm(mats, ord=2, axis=(1, 2))


def estimate_theta_A(alpha: float, A, T: float, delta: float, grid_resolution: int = 200) -> ThetaAEstimate:
    """For alpha = 1 delta is ignored and d = 0 is included (the sup is finite)."""
    A = A if isinstance(A, GeneratorMatrix) else GeneratorMatrix(A, alpha=alpha)
    if not (0 < delta < T):
        raise ValueError("need 0 < delta < T")
    if alpha == 1.0:
        d = np.concatenate([[0.0], np.geomspace(delta, T, grid_resolution)])
        vals = _kernel_norms(alpha, A, d)
        caveat = "alpha = 1: kernel power vanishes, supremum is finite; delta unused"
    else:
        d = np.geomspace(delta, T, grid_resolution)
        vals = d ** (alpha - 1.0) * _kernel_norms(alpha, A, d)
        caveat = THETA_A_CAVEAT
    k = int(np.argmax(vals))

    # int_0^T d^(a-1) F(d^a) dd = (1/a) int_0^{T^a} F(x) dx, smooth in x
    xg, wg = np.polynomial.legendre.leggauss(64)
    top = T**alpha
    x = 0.5 * top * (xg + 1.0)
    norms = np.linalg.norm(ml_matrix_batch(MLParams(alpha, alpha), x, A), ord=2, axis=(1, 2))
    integrated = 0.5 * top * float(wg @ norms) / alpha
    return ThetaAEstimate(float(vals[k]), integrated, float(delta), float(d[k]), caveat)


class Envelope:
    """Nondecreasing function R+ -> R+ given in closed form or as a table.

    Tables are interpolated linearly and extended proportionally to k beyond
    their last point (at most linear growth is assumed there).
    """

    def __init__(self, tag: str, params: dict | None = None, ks=None, values=None):
        self.tag = tag
        self.params = dict(params or {})
        if tag == "tabulated":
            ks = np.asarray(ks, dtype=float)
            values = np.maximum.accumulate(np.asarray(values, dtype=float))
            self.ks, self.values = ks, values
        elif tag not in ("constant", "affine", "power", "custom"):
            raise ValueError(f"unknown envelope tag {tag!r}")

    @classmethod
    def constant(cls, c: float) -> Envelope:
        return cls("constant", {"c": float(c)})

    @classmethod
    def affine(cls, a: float = 1.0, b: float = 1.0) -> Envelope:
        return cls("affine", {"a": float(a), "b": float(b)})

    @classmethod
    def power(cls, c: float, p: float) -> Envelope:
        return cls("power", {"c": float(c), "p": float(p)})

    @classmethod
    def custom(cls, fn: Callable[[float], float]) -> Envelope:
        return cls("custom", {"fn": fn})

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        p = self.params
        if self.tag == "constant":
            out = np.full(k.shape, p["c"])
        elif self.tag == "affine":
            out = p["a"] + p["b"] * k
        elif self.tag == "power":
            out = p["c"] * k ** p["p"]
        elif self.tag == "custom":
            out = np.vectorize(p["fn"], otypes=[float])(k)
        else:
            out = np.interp(k, self.ks, self.values)
            beyond = k > self.ks[-1]
            if np.any(beyond):
                out = np.where(beyond, self.values[-1] * k / self.ks[-1], out)
        return out[()] if out.ndim == 0 else out

    def to_dict(self) -> dict:
        if self.tag == "tabulated":
            return {"tag": self.tag, "k": self.ks.tolist(), "values": self.values.tolist()}
        if self.tag == "custom":
            return {"tag": self.tag}
        return {"tag": self.tag, **self.params}


def _l2(x: np.ndarray, v: np.ndarray) -> float:
    return float(math.sqrt(trapezoid(np.asarray(v) ** 2, x)))


@dataclass
class GrowthData:
    xi: np.ndarray
    rho_B: np.ndarray
    Upsilon_B: Envelope
    rho_f: np.ndarray
    Upsilon_h: Envelope
    Theta_g: float
    Theta_A: float
    delta_reg: float
    Theta_A_integrated: float = math.nan
    rho_B_L2: float = field(default=math.nan)
    rho_f_L2: float = field(default=math.nan)
    empirical: bool = True
    seed: int | None = None

    def __post_init__(self) -> None:
        self.xi = np.asarray(self.xi, dtype=float)
        self.rho_B = np.asarray(self.rho_B, dtype=float)
        self.rho_f = np.asarray(self.rho_f, dtype=float)
        if np.any(self.rho_B < 0) or np.any(self.rho_f < 0):
            raise ValueError("growth envelopes must be nonnegative")
        if math.isnan(self.rho_B_L2):
            self.rho_B_L2 = _l2(self.xi, self.rho_B)
        if math.isnan(self.rho_f_L2):
            self.rho_f_L2 = _l2(self.xi, self.rho_f)

    @classmethod
    def from_constants(cls, T, rho_B, rho_f, Upsilon_B, Upsilon_h, Theta_g, Theta_A, delta_reg=0.01,
                       points: int = 65) -> GrowthData:
        xi = np.linspace(0.0, T, points)
        return cls(xi, np.full(points, float(rho_B)), Upsilon_B, np.full(points, float(rho_f)),
                   Upsilon_h, float(Theta_g), float(Theta_A), float(delta_reg), empirical=False)

    def to_dict(self) -> dict:
        return {
            "xi": self.xi.tolist(),
            "rho_B": self.rho_B.tolist(),
            "rho_B_L2": self.rho_B_L2,
            "Upsilon_B": self.Upsilon_B.to_dict(),
            "rho_f": self.rho_f.tolist(),
            "rho_f_L2": self.rho_f_L2,
            "Upsilon_h": self.Upsilon_h.to_dict(),
            "Theta_g": self.Theta_g,
            "Theta_A": self.Theta_A,
            "Theta_A_integrated": self.Theta_A_integrated,
            "delta_reg": self.delta_reg,
            "empirical": self.empirical,
            "seed": self.seed,
        }


class Condition43Result(NamedTuple):
    passed: bool
    lhs_trend: list
    rhs: float
    margin: float
    caveat: str


def check_condition_43(data: GrowthData, T: float, k_sequence=DEFAULT_K_SEQUENCE) -> Condition43Result:
    """Sampled liminf of the growth functional against 1 / (Theta_A sqrt(T)).

    L(k) = Theta_g |rho_B| Upsilon_B(k)/k + |rho_f| + Upsilon_h(k)/(k sqrt(T)), the
    liminf taken as the minimum over the three largest k.
    """
    ks = np.asarray(k_sequence, dtype=float)
    if ks.size < 5 or np.any(np.diff(ks) <= 0) or ks[-1] < 1e4:
        raise ValueError("k_sequence must increase, have >= 5 entries and reach 1e4")
    sqT = math.sqrt(T)
    lhs = (
        data.Theta_g * data.rho_B_L2 * np.asarray(data.Upsilon_B(ks)) / ks
        + data.rho_f_L2
        + np.asarray(data.Upsilon_h(ks)) / (ks * sqT)
    )
    rhs = math.inf if data.Theta_A == 0 else 1.0 / (data.Theta_A * sqT)
    est = float(np.min(lhs[-3:]))
    return Condition43Result(bool(est < rhs), lhs.tolist(), rhs, rhs - est, THETA_A_CAVEAT)


# }}}


# {{{ weighted norm


def _ml_moments(alpha: float, L: float, x: np.ndarray):
    """P1(x) = int_0^x E_a(-L t^a) dt and P2(x) = int_0^x t E_a(-L t^a) dt."""
    # termwise: int_0^x t^(ak+1) dt / Gamma(ak+1) = x^(ak+2) (1/Gamma(ak+2) - 1/Gamma(ak+3))
    z = -L * x**alpha
    e2 = mittag_leffler(alpha, 2.0, z)
    return x * e2, x * x * (e2 - mittag_leffler(alpha, 3.0, z))


def weight_certificate(alpha, xi, q, L, Theta_A) -> float:
    """sup_i Theta_A int_0^{xi_i} E_a(-L (xi_i - s)^a) q(s) ds, q piecewise linear.

    Exact product integration through the moments of the Mittag-Leffler weight.
    """
    xi = np.asarray(xi, dtype=float)
    q = np.asarray(q, dtype=float)
    diffs = xi[:, None] - xi[None, :]
    lower = np.tril(np.ones_like(diffs, dtype=bool))
    keys, inv = np.unique(np.round(diffs[lower], 15), return_inverse=True)
    keys = np.maximum(keys, 0.0)
    P1k, P2k = _ml_moments(alpha, L, keys)
    P1 = np.zeros_like(diffs)
    P2 = np.zeros_like(diffs)
    P1[lower] = P1k[inv]
    P2[lower] = P2k[inv]
    dx = np.diff(xi)
    slope = np.diff(q) / dx
    best = 0.0
    for i in range(1, xi.size):
        b = diffs[i, :i]
        m0 = P1[i, :i] - P1[i, 1 : i + 1]
        m1 = P2[i, :i] - P2[i, 1 : i + 1]
        val = q[:i] @ m0 + slope[:i] @ (b * m0 - m1)
        best = max(best, val)
    return float(Theta_A * best)


def verify_weight_certificate(alpha, xi, q, L, Theta_A, refine: int = 2, order: int = 8) -> float:
    """Independent check of :func:`weight_certificate`.

    Refines the grid ``refine`` times, interpolates q linearly and integrates
    with Gauss-Legendre on each subinterval, evaluating the weight pointwise.
    """
    xi = np.asarray(xi, dtype=float)
    q = np.asarray(q, dtype=float)
    fine = np.concatenate([np.linspace(a, b, refine + 1)[:-1] for a, b in zip(xi[:-1], xi[1:])] + [xi[-1:]])
    qf = np.interp(fine, xi, q)
    xg, wg = np.polynomial.legendre.leggauss(order)
    a, b = fine[:-1], fine[1:]
    s = 0.5 * (b - a)[:, None] * (xg + 1.0) + a[:, None]
    qs = np.interp(s, fine, qf)
    ws = 0.5 * (b - a)[:, None] * wg
    best = 0.0
    for i in range(1, fine.size):
        x = fine[i]
        k = mittag_leffler(alpha, 1.0, -L * (x - s[:i]) ** alpha)
        best = max(best, float(np.sum(ws[:i] * k * qs[:i])))
    return float(Theta_A * best)


def select_weight_L(
    alpha: float,
    T: float,
    Theta_A_reg: float,
    rho_B_samples,
    rho_f_samples,
    Theta_g: float,
    tol: float = 0.01,
    xi=None,
    L_min: float = 1e-6,
    L_max: float = 1e12,
    target: float = 1.0 - 1e-3,
):
    """Smallest L (to relative ``tol``) with certificate below ``target``; returns (L, certificate).

    Doubling from ``L_min``, then bisection. Raises :class:`NoFeasibleL` past ``L_max``.
    """
    if not (0 < tol < 0.1):
        raise ValueError("tol must lie in (0, 0.1)")
    rb = np.asarray(rho_B_samples, dtype=float)
    rf = np.asarray(rho_f_samples, dtype=float)
    if rb.shape != rf.shape:
        raise ValueError("rho_B and rho_f samples must align")
    xi = np.linspace(0.0, T, rb.size) if xi is None else np.asarray(xi, dtype=float)
    q = Theta_g * rb + rf

    def cert(L):
        return weight_certificate(alpha, xi, q, L, Theta_A_reg)

    L = L_min
    c = cert(L)
    if c < target:
        return L, c
    while c >= target:
        if L > L_max:
            raise NoFeasibleL(f"certificate {c:.3g} still >= {target} at L = {L:.3g}")
        lo, L = L, 2.0 * L
        c = cert(L)
    hi, c_hi = L, c
    while (hi - lo) > tol * hi:
        mid = 0.5 * (lo + hi)
        cm = cert(mid)
        if cm < target:
            hi, c_hi = mid, cm
        else:
            lo = mid
    return hi, c_hi


def sup_norm(path: SampledPath) -> float:
    return float(np.max(np.linalg.norm(path.values, axis=1)))


def weighted_norm(traj_states: SampledPath, L: float, alpha: float) -> float:
    """max_i E_a(-L xi_i^a) |theta(xi_i)|; the plain sup norm when L = 0."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L == 0:
        return sup_norm(traj_states)
    w = mittag_leffler(alpha, 1.0, -L * traj_states.nodes**alpha)
    return float(np.max(w * np.linalg.norm(traj_states.values, axis=1)))


# }}}


def chi_diagnostic(ensemble: Sequence[SampledPath], delta_sequence) -> list[float]:
    """0.5 * sup over paths of max |x(xi_i) - x(xi_j)| over pairs with |xi_i - xi_j| <= delta."""
    if not ensemble:
        raise ValueError("empty ensemble")
    grid = ensemble[0].grid
    for p in ensemble[1:]:
        if not p.grid.same_as(grid) or p.offset != ensemble[0].offset:
            raise ValueError("ensemble paths must share a grid")
    x = ensemble[0].nodes
    slack = 1e-12 * max(1.0, float(x[-1]))
    min_step = float(np.min(np.diff(x)))
    out = []
    for delta in delta_sequence:
        if delta + slack < min_step:
            raise DeltaBelowResolution(f"delta {delta} is below the grid spacing {min_step}")
        best = 0.0
        for path in ensemble:
            v = path.values
            for o in range(1, x.size):
                ok = (x[o:] - x[:-o]) <= delta + slack
                if not np.any(ok):
                    break
                d = np.linalg.norm(v[o:][ok] - v[:-o][ok], axis=1)
                best = max(best, float(d.max()))
        out.append(0.5 * best)
    return out


# {{{ growth data from a problem


def estimate_growth(
    problem,
    probe_radius: float = 1.0,
    sample_count: int = 100,
    seed: int = 0,
    grid: TimeGrid | None = None,
    delta: float | None = None,
    k_grid=None,
) -> GrowthData:
    """Sampled envelopes for B, f, h and the constants Theta_g, Theta_A."""
    if not probe_radius > 0:
        raise ValueError("probe_radius must be positive")
    if sample_count < 100:
        raise ValueError("sample_count must be >= 100")
    rng = np.random.default_rng(seed)
    grid = grid or TimeGrid.uniform(problem.T, 64)
    xs = grid.nodes
    n = problem.n

    def ball(count):
        d = rng.standard_normal((count, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return probe_radius * d * rng.random((count, 1)) ** (1.0 / n)

    # f: Lipschitz quotients and |f(xi, 0)|
    th, ys = ball(sample_count), ball(sample_count)
    rho_f = np.empty(xs.size)
    for i, x in enumerate(xs):
        xx = np.full(sample_count, x)
        df = problem.f.evaluate(xx, th) - problem.f.evaluate(xx, ys)
        quot = np.linalg.norm(df, axis=1) / np.linalg.norm(th - ys, axis=1)
        f0 = np.linalg.norm(problem.f(x, np.zeros(n)))
        rho_f[i] = max(float(quot.max()), float(f0))

    # B: state independent or affine ansatz 1 + k
    if problem.B.state_independent:
        ups_B = Envelope.constant(1.0)
        rho_B = np.array([np.linalg.norm(problem.B(x, np.zeros(n)), 2) for x in xs])
    else:
        ups_B = Envelope.affine(1.0, 1.0)
        samp = np.vstack([np.zeros((1, n)), ball(sample_count)])
        scale = 1.0 + np.linalg.norm(samp, axis=1)
        rho_B = np.empty(xs.size)
        for i, x in enumerate(xs):
            mats = problem.B.evaluate(np.full(samp.shape[0], x), samp)
            rho_B[i] = float(np.max(np.linalg.norm(mats, ord=2, axis=(1, 2)) / scale))

    # h on constant paths of norm k
    ks = np.concatenate([[0.0], np.geomspace(1e-2, 1e8, 41)]) if k_grid is None else np.asarray(k_grid)
    dirs = rng.standard_normal((max(8, sample_count // 10), n))
    dirs = np.vstack([dirs / np.linalg.norm(dirs, axis=1, keepdims=True), np.eye(n), -np.eye(n)])
    ups_h = np.empty(ks.size)
    for j, k in enumerate(ks):
        vals = [np.linalg.norm(problem.h(grid, np.broadcast_to(k * d, (xs.size, n)))) for d in dirs]
        ups_h[j] = max(vals)
    Upsilon_h = Envelope("tabulated", ks=ks, values=ups_h)

    # bound on |g| over the probe domain feeds the VI solution bound
    gx = problem.T * rng.random(sample_count)
    g_norm = float(np.max(np.linalg.norm(problem.g.evaluate(gx, ball(sample_count)), axis=1)))
    Theta_g = sol_bound(problem.K, problem.G, problem.phi, max(g_norm, 1e-12), sample_count, seed=seed)

    delta = delta if delta is not None else 0.01 * problem.T
    ta = estimate_theta_A(problem.alpha, problem.A, problem.T, delta)
    return GrowthData(xs, rho_B, ups_B, rho_f, Upsilon_h, Theta_g, ta.value, delta,
                      Theta_A_integrated=ta.integrated, seed=seed)


# }}}


def run_hypotheses(problem, config: dict | None = None) -> dict:
    """Run every probe with a single root seed; returns a JSON-ready report.

    Hard failures are P1, P2 and P4; the rest are reported as diagnostics.
    """
    cfg = {
        "seed": 0,
        "pair_count": 200,
        "sample_count": 100,
        "probe_radius": 1.0,
        "delta": 0.01 * problem.T,
        "k_sequence": list(DEFAULT_K_SEQUENCE),
        "coercivity_radii": [1.0, 10.0, 100.0, 1000.0],
        "weight_tol": 0.01,
    }
    cfg.update({k: v for k, v in (config or {}).items() if v is not None})
    seq = np.random.SeedSequence(int(cfg["seed"]))
    s = [np.random.default_rng(c) for c in seq.spawn(5)]

    p1 = probe_p1_monotone(problem.G, problem.K, int(cfg["pair_count"]), s[0])
    p2 = probe_p2_convex(problem.phi, problem.K, int(cfg["pair_count"]), s[1])
    p3 = probe_p3_coercive(problem.G, problem.phi, problem.K, cfg["coercivity_radii"], seed=s[2])
    p4 = probe_p4_bounded(problem.g, problem.T, problem.n, seed=s[3])
    growth_seed = int(s[4].integers(0, 2**31 - 1))
    data = estimate_growth(problem, float(cfg["probe_radius"]), int(cfg["sample_count"]), growth_seed,
                           delta=float(cfg["delta"]))
    c43 = check_condition_43(data, problem.T, cfg["k_sequence"])
    try:
        L, cert = select_weight_L(problem.alpha, problem.T, data.Theta_A, data.rho_B, data.rho_f,
                                  data.Theta_g, float(cfg["weight_tol"]), xi=data.xi)
        weight = {"feasible": True, "L": L, "certificate": cert}
    except NoFeasibleL as exc:
        weight = {"feasible": False, "L": None, "certificate": None, "message": str(exc)}

    hard_fail = not (p1.passed and p2.passed and p4.passed)
    return {
        "seed": int(cfg["seed"]),
        "config": {k: v for k, v in cfg.items()},
        "P1_monotone": {"passed": p1.passed, "worst": p1.worst},
        "P2_convex": {"passed": p2.passed, "worst": p2.worst},
        "P3_coercive": {"passed": p3.passed, "vacuous": p3.vacuous, "trend": p3.trend},
        "P4_g_bounded": {"passed": p4.passed, "sup_estimate": p4.worst},
        "growth": data.to_dict(),
        "condition_43": {
            "passed": c43.passed,
            "lhs_trend": c43.lhs_trend,
            "rhs": c43.rhs,
            "margin": c43.margin,
            "caveat": c43.caveat,
        },
        "weight_L": weight,
        "hard_fail": hard_fail,
        "note": "probes are sampled evidence and every constant is an empirical lower bound",
    }
