"""One- and two-parameter Mittag-Leffler functions of scalar and matrix argument.

Scalar values are computed by one of three routes, picked per argument:

* the power series (Kahan-compensated), when it converges without
  catastrophic cancellation;
* the algebraic asymptotic expansion (plus the exponential pole term), for
  large arguments;
* inversion of the Laplace transform ``s**(alpha - beta) / (s**alpha - z)``
  by the trapezoidal rule on a parabolic Bromwich contour, with the residue
  of any pole left outside the contour added back.

Matrix values use an eigendecomposition when the eigenvector basis is well
conditioned, and fall back to quadrature of the resolvent along the Hankel
path otherwise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ._gamma import gamma, rgamma
from .errors import (
    ContourFailure,
    DimensionMismatch,
    InvalidOrder,
    NonConvergent,
    SectorViolation,
    SingularResolvent,
)

__all__ = [
    "MLParams",
    "HankelPath",
    "GeneratorMatrix",
    "mittag_leffler",
    "ml_scalar",
    "ml_matrix",
    "ml_matrix_batch",
    "hankel_quadrature",
    "sector_margin",
    "gamma",
    "rgamma",
]

SERIES_RADIUS = 15.0
SERIES_TERMS = 250
ASYMPTOTIC_RADIUS = 100.0
ASYMPTOTIC_TERMS = 60
EIGVEC_COND_MAX = 1.0e6
RESOLVENT_COND_MAX = 1.0e14

# relative accuracy assumed for a single series term (dominated by 1/Gamma)
_TERM_EPS = 1.0e-14
# the series is accepted when its estimated rounding error is below this
_SERIES_RTOL = 1.0e-13

# parabolic contour: target log error, strip safety factor, nominal mu
_LOG_TOL = math.log(1.0e-16)
_STRIP_SAFETY = 0.9
_MU0 = 1.0

# Hankel quadrature: share of nodes on the arc and double-exponential ranges
_ARC_FRACTION = 0.5
_ARC_RADIUS_REF = 3.0
_POLE_GAP = 2.0
_ARC_TMAX = 3.2
_RAY_TMIN = -3.6
_RAY_TMAX = math.log(50.0)


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float = 1.0

    def __post_init__(self) -> None:
        a, b = float(self.alpha), float(self.beta)
        if not (math.isfinite(a) and 0.0 < a <= 1.0):
            raise InvalidOrder(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not (math.isfinite(b) and b > 0.0):
            raise InvalidOrder(f"beta must be positive, got {self.beta!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)


@dataclass(frozen=True)
class HankelPath:
    """Keyhole contour: two rays at angles +-theta joined by an arc of radius epsilon."""

    epsilon: float = 1.0
    theta: float = 0.75 * math.pi
    node_count: int = 256

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")
        if not (0.5 * math.pi < self.theta < math.pi):
            raise ValueError(f"theta must lie in (pi/2, pi), got {self.theta!r}")
        if int(self.node_count) != self.node_count or self.node_count < 8:
            raise ValueError(f"node_count must be an integer >= 8, got {self.node_count!r}")


# {{{ scalar evaluation


def _series(alpha: float, beta: float, z: np.ndarray):
    """Kahan-summed power series; returns (value, accepted mask)."""
    k = np.arange(SERIES_TERMS, dtype=float)
    rg = rgamma(alpha * k + beta)

    s = np.zeros_like(z)
    c = np.zeros_like(z)
    sabs = np.zeros(z.shape)
    zk = np.ones_like(z)
    tail = np.zeros(z.shape)
    for i in range(SERIES_TERMS):
        t = zk * rg[i]
        y = t - c
        tt = s + y
        c = (tt - s) - y
        s = tt
        at = np.abs(t)
        sabs += at
        if i >= SERIES_TERMS - 3:
            tail = np.maximum(tail, at)
        zk = zk * z

    mag = np.abs(s)
    with np.errstate(invalid="ignore"):
        ok = (tail <= 1.0e-17 * mag) & (_TERM_EPS * sabs <= _SERIES_RTOL * mag)
    return s, ok


def _principal_pole(alpha: float, z: complex) -> complex | None:
    """Root of s**alpha = z on the principal sheet, if there is one."""
    arg = cmath.phase(z)
    if alpha < 1.0 and abs(arg) >= alpha * math.pi:
        return None
    return abs(z) ** (1.0 / alpha) * cmath.exp(1j * arg / alpha)


def _asymptotic(alpha: float, beta: float, z: np.ndarray):
    """Large-|z| expansion; returns (value, accepted mask)."""
    out = np.zeros_like(z)
    ok = np.zeros(z.shape, dtype=bool)
    k = np.arange(1, ASYMPTOTIC_TERMS + 1, dtype=float)
    coef = rgamma(beta - alpha * k)
    for idx, zi in enumerate(z):
        pole = 0.0j
        sp = _principal_pole(alpha, zi)
        if sp is not None:
            if sp.real > 700.0:
                continue
            pole = sp ** (1.0 - beta) * cmath.exp(sp) / alpha
        total = 0.0j
        last = math.inf
        err = math.inf
        inv = 1.0 / zi
        p = 1.0 + 0.0j
        for j in range(ASYMPTOTIC_TERMS):
            p = p * inv
            if coef[j] == 0.0:
                continue
            t = coef[j] * p
            at = abs(t)
            if at > last:
                break
            total -= t
            last = at
            err = at
            if at <= 1.0e-17 * abs(total + pole):
                break
        value = total + pole
        if err <= 1.0e-16 * abs(value) or (err == math.inf and value != 0):
            out[idx] = value
            ok[idx] = True
    return out, ok


def _contour_plan(alpha: float, beta: float, z: complex):
    """Choose (mu, h, n, residue) for the parabola s(u) = mu (1 + iu)**2.

    The parabola is the level set {Re sqrt(s) = sqrt(mu)}; a singularity s0 lies
    to its left iff phi(s0) = (Re s0 + |s0|) / 2 < mu. Singularities on the left
    sit at distance 1 - sqrt(phi/mu) above the real u-axis, those on the right at
    sqrt(phi/mu) - 1 below it; trapezoidal error decays like exp(-2 pi d / h).
    """
    sp = _principal_pole(alpha, z)
    residue = 0.0j
    phi_in, phi_out = 0.0, math.inf
    mu = _MU0
    if sp is not None:
        phi = 0.5 * (sp.real + abs(sp))
        if phi <= 0.25 * _MU0:
            phi_in = phi
        elif phi <= _MU0:
            mu = 4.0 * phi
            phi_in = phi
        else:
            mu = min(_MU0, 0.25 * phi)
            phi_out = phi
            if sp.real > 700.0:
                raise NonConvergent(
                    f"E_alpha,beta({z}) overflows double precision", estimate=complex(math.inf)
                )
            residue = sp ** (1.0 - beta) * cmath.exp(sp) / alpha

    L = _LOG_TOL
    d_up = _STRIP_SAFETY * (1.0 - math.sqrt(phi_in / mu))
    h_up = 2.0 * math.pi * d_up / (mu - L)
    h_lo = math.pi / (mu + math.sqrt(mu * mu - mu * L))
    if math.isfinite(phi_out):
        d_lo_max = _STRIP_SAFETY * (math.sqrt(phi_out / mu) - 1.0)
        if math.pi / (mu * h_lo) - 1.0 > d_lo_max:
            h_lo = 2.0 * math.pi * d_lo_max / (mu * (1.0 + d_lo_max) ** 2 - L)
    h = min(h_up, h_lo)
    n = int(math.ceil(math.sqrt(1.0 - L / mu) / h))
    return mu, h, n, residue


def _contour(alpha: float, beta: float, z: np.ndarray, chunk: int = 1024) -> np.ndarray:
    out = np.empty_like(z)
    plans = [_contour_plan(alpha, beta, complex(zi)) for zi in z]
    mu = np.array([p[0] for p in plans])
    h = np.array([p[1] for p in plans])
    n = np.array([p[2] for p in plans])
    res = np.array([p[3] for p in plans], dtype=complex)

    for lo in range(0, z.size, chunk):
        sl = slice(lo, lo + chunk)
        nmax = int(n[sl].max())
        k = np.arange(-nmax, nmax + 1, dtype=float)
        u = h[sl, None] * k[None, :]
        w = 1.0 + 1j * u
        s = mu[sl, None] * w * w
        ds = 2j * mu[sl, None] * w
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.exp(s) * s ** (alpha - beta) / (s**alpha - z[sl, None]) * ds
        f[np.abs(k)[None, :] > n[sl, None]] = 0.0
        out[sl] = h[sl] / (2j * math.pi) * f.sum(axis=1) + res[sl]
    return out


# }}}


def mittag_leffler(alpha: float, beta: float, z) -> np.ndarray | complex | float:
    """Vectorised E_{alpha, beta}(z).

    Real input gives real output. Raises :class:`NonConvergent` when a value is
    not representable in double precision.
    """
    MLParams(alpha, beta)
    alpha = float(alpha)
    beta = float(beta)
    zin = np.asarray(z)
    real_input = not np.iscomplexobj(zin)
    za = np.atleast_1d(zin).astype(complex).ravel()
    if not np.all(np.isfinite(za)):
        raise ValueError("Mittag-Leffler argument must be finite")

    out = np.empty_like(za)
    todo = np.ones(za.shape, dtype=bool)

    zero = za == 0
    out[zero] = rgamma(beta)
    todo &= ~zero

    if alpha == 1.0 and beta == 1.0:
        out[todo] = np.exp(za[todo])
        todo[:] = False

    absz = np.abs(za)
    cand = todo & (absz <= SERIES_RADIUS)
    if np.any(cand):
        idx = np.flatnonzero(cand)
        val, ok = _series(alpha, beta, za[idx])
        out[idx[ok]] = val[ok]
        todo[idx[ok]] = False

    cand = todo & (absz >= ASYMPTOTIC_RADIUS)
    if np.any(cand):
        idx = np.flatnonzero(cand)
        val, ok = _asymptotic(alpha, beta, za[idx])
        out[idx[ok]] = val[ok]
        todo[idx[ok]] = False

    if np.any(todo):
        idx = np.flatnonzero(todo)
        out[idx] = _contour(alpha, beta, za[idx])

    if not np.all(np.isfinite(out)):
        bad = za[~np.isfinite(out)][0]
        raise NonConvergent(f"E_{alpha},{beta}({bad}) is not finite", estimate=out)

    if real_input:
        out = out.real
    out = out.reshape(zin.shape)
    return out[()] if out.ndim == 0 else out


def ml_scalar(params: MLParams, z: complex) -> complex:
    """E_{alpha, beta}(z) for a single complex argument."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError("Mittag-Leffler argument must be finite")
    return complex(mittag_leffler(params.alpha, params.beta, np.array([z]))[0])


# {{{ matrix argument


def _ray_distance(w: complex, angle: float, rmin: float) -> float:
    direction = cmath.exp(1j * angle)
    t = max((w * direction.conjugate()).real, rmin)
    return abs(w - t * direction)


def sector_margin(eigenvalues, alpha: float, path: HankelPath) -> float:
    """Signed distance from the spectrum of a generator to the admissible region.

    Poles of the resolvent integrand sit where lambda**alpha equals an eigenvalue
    ``g`` of the generator. Under lambda -> lambda**alpha the Hankel path maps to
    rays at +-alpha*theta joined by an arc of radius epsilon**alpha; a pole is
    enclosed iff ``g`` lies in the disk or beyond the rays. Positive means every
    eigenvalue is strictly enclosed.
    """
    rho = path.epsilon**alpha
    phi = alpha * path.theta
    margin = math.inf
    for g in np.atleast_1d(np.asarray(eigenvalues, dtype=complex)):
        g = complex(g)
        r = abs(g)
        arg = abs(cmath.phase(g))
        # distance to the boundary pieces
        d = min(
            _ray_distance(g, phi, rho),
            _ray_distance(g, -phi, rho),
            _arc_distance(g, rho, phi),
        )
        inside = r < rho or arg > phi
        margin = min(margin, d if inside else -d)
    return margin


def _arc_distance(w: complex, radius: float, half_angle: float) -> float:
    arg = cmath.phase(w)
    if abs(arg) <= half_angle:
        return abs(abs(w) - radius)
    ends = [radius * cmath.exp(1j * half_angle), radius * cmath.exp(-1j * half_angle)]
    return min(abs(w - e) for e in ends)


def _ray_angle(eigenvalues, alpha: float) -> float:
    """Ray angle in [0.6 pi, 0.9 pi] keeping the largest angular gap to poles left of the rays.

    Poles that end up right of the rays are enclosed by the radius reset, so only
    those at arg lambda in (pi/2, pi) can sit close to a ray.
    """
    g = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    g = g[g != 0]
    ang = np.abs(np.angle(g))
    ang = ang[ang < alpha * math.pi] / alpha
    ang = ang[ang > 0.5 * math.pi]
    if ang.size == 0:
        return 0.75 * math.pi
    cands = np.linspace(0.6, 0.9, 31) * math.pi
    gap = np.min(np.abs(cands[:, None] - ang[None, :]), axis=1)
    best = np.flatnonzero(gap >= gap.max() - 1e-12)
    return float(cands[best[np.argmin(np.abs(cands[best] - 0.75 * math.pi))]])


def _auto_path(eigenvalues, alpha: float, base: HankelPath | None = None) -> HankelPath:
    base = base or HankelPath(theta=_ray_angle(eigenvalues, alpha))
    if sector_margin(eigenvalues, alpha, base) > 0:
        return base
    eps = base.epsilon
    for g in np.atleast_1d(eigenvalues):
        eps = max(eps, (1.5 * abs(complex(g))) ** (1.0 / alpha))
    path = HankelPath(eps, base.theta, base.node_count)
    if sector_margin(eigenvalues, alpha, path) <= 0:
        raise SectorViolation("no admissible Hankel path encloses the spectrum")
    return path


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Dense square generator with a cached eigendecomposition.

    ``path`` is the Hankel path used by the quadrature fallback; when omitted an
    admissible one is derived from the spectrum for the given ``alpha``.
    """

    entries: np.ndarray
    path: HankelPath | None = None
    alpha: float = 1.0
    sector_margin: float = field(init=False)

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatch(f"generator must be a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("generator entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

        if np.array_equal(a, a.T):
            w, v = np.linalg.eigh(a)
            w = w.astype(complex)
            v = v.astype(complex)
            vinv = v.conj().T
            cond = 1.0
        else:
            w, v = np.linalg.eig(a)
            cond = float(np.linalg.cond(v))
            vinv = np.linalg.inv(v) if np.isfinite(cond) and cond < 1e15 else None
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "_eigvecs", v)
        object.__setattr__(self, "_eigvecs_inv", vinv)
        object.__setattr__(self, "eigvec_cond", cond)

        user_path = self.path
        path = _auto_path(w, self.alpha, user_path) if user_path is None else user_path
        margin = sector_margin(w, self.alpha, path)
        if margin <= 0:
            raise SectorViolation(
                f"spectrum is not enclosed by the Hankel path (margin {margin:.3g})"
            )
        object.__setattr__(self, "path", path)
        object.__setattr__(self, "sector_margin", margin)
        object.__setattr__(self, "_user_path", user_path)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonalizable(self) -> bool:
        return self._eigvecs_inv is not None and self.eigvec_cond <= EIGVEC_COND_MAX

    def path_for(self, alpha: float) -> HankelPath:
        if self._user_path is not None:
            return self._user_path
        return _auto_path(self.eigenvalues, alpha)


def _as_generator(A) -> GeneratorMatrix:
    return A if isinstance(A, GeneratorMatrix) else GeneratorMatrix(A)


def _hankel_nodes(radius: float, theta: float, total: int):
    """Nodes and weights (including dmu and 1/(2 pi i)) on a Hankel path in the scaled variable.

    Trapezoidal rule in double-exponential variables: tanh-sinh on the arc and
    r = radius + l*exp(tau - exp(-tau)) on the rays, which clusters nodes
    towards the junction with the arc and spaces them single-exponentially
    where exp(mu) decays.
    """
    n_ray = max(int(round(0.5 * (1.0 - _ARC_FRACTION) * total)), 2)
    # the arc integrand oscillates on a scale ~ 1/radius; keep nodes per radian fixed
    n_arc = max(int(round(_ARC_FRACTION * total * max(1.0, radius / _ARC_RADIUS_REF))), 4)

    t = np.linspace(-_ARC_TMAX, _ARC_TMAX, n_arc)
    ht = t[1] - t[0]
    q = 0.5 * math.pi * np.sinh(t)
    ang = theta * np.tanh(q)
    dang = theta * 0.5 * math.pi * np.cosh(t) / np.cosh(q) ** 2
    mu_arc = radius * np.exp(1j * ang)
    w_arc = 1j * mu_arc * dang * ht

    ell = 1.0 / abs(math.cos(theta))
    tau = np.linspace(_RAY_TMIN, _RAY_TMAX, n_ray)
    hr = tau[1] - tau[0]
    g = np.exp(tau - np.exp(-tau))
    r = radius + ell * g
    dr = ell * g * (1.0 + np.exp(-tau)) * hr
    up = cmath.exp(1j * theta)

    mu = np.concatenate([r * up.conjugate(), mu_arc, r * up])
    w = np.concatenate([-up.conjugate() * dr, w_arc, up * dr]) / (2j * math.pi)
    return mu, w


def hankel_quadrature(params: MLParams, xi: float, A, path: HankelPath | None = None) -> np.ndarray:
    """E_{alpha, beta}(-xi**alpha A) by quadrature of the resolvent on the Hankel path.

    Uses ``xi**(beta-1) E_{alpha,beta}(-xi**alpha A)
    = (1/2 pi i) int_Ha exp(lambda xi) lambda**(alpha-beta) (lambda**alpha I + A)**-1 dlambda``
    with ``A`` positive sectorial, i.e. the spectrum of ``-A`` enclosed by ``path``.

    The integral is computed in mu = xi*lambda. The arc radius is then reset to
    max(1, outermost enclosed pole + 2), which crosses no singularity and so
    leaves the integral unchanged while keeping exp(mu) of moderate size on the arc.
    """
    if not xi > 0:
        raise ValueError(f"xi must be positive, got {xi!r}")
    a = A.entries if isinstance(A, GeneratorMatrix) else np.atleast_2d(np.asarray(A, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    n = a.shape[0]
    alpha, beta = params.alpha, params.beta
    g = -np.linalg.eigvals(a)
    path = path or _auto_path(g, alpha)
    margin = sector_margin(g, alpha, path)
    if margin <= 0:
        raise SectorViolation(f"spectrum of -A not enclosed by the Hankel path (margin {margin:.3g})")

    in_sector = np.abs(np.angle(g)) <= alpha * path.theta
    outer = float(np.max(np.abs(g[in_sector]), initial=0.0)) ** (1.0 / alpha)
    radius = max(1.0, xi * outer + _POLE_GAP) if outer > 0 else 1.0

    mu, w = _hankel_nodes(radius, path.theta, int(path.node_count))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        coef = w * np.exp(mu) * mu ** (alpha - beta)
    keep = np.abs(coef) > 0
    mu, coef = mu[keep], coef[keep]

    eye = np.eye(n)
    mats = (mu**alpha)[:, None, None] * eye + (xi**alpha) * a[None, :, :]
    conds = np.linalg.cond(mats)
    if not np.all(np.isfinite(conds)) or conds.max() > RESOLVENT_COND_MAX:
        raise SingularResolvent(
            f"resolvent numerically singular on the Hankel path (cond {conds.max():.3g})"
        )
    inv = np.linalg.solve(mats, np.broadcast_to(eye, mats.shape))
    result = np.einsum("k,kij->ij", coef, inv)
    if not np.all(np.isfinite(result)):
        raise ContourFailure("Hankel quadrature produced non-finite values")
    return result.real.copy()


def ml_matrix(params: MLParams, scale: float, A) -> np.ndarray:
    """E_{alpha, beta}(scale * A) for a generator matrix ``A`` (sign supplied by the caller)."""
    return ml_matrix_batch(params, np.array([scale], dtype=float), A)[0]


def ml_matrix_batch(params: MLParams, scales, A) -> np.ndarray:
    """E_{alpha, beta}(s * A) for every ``s`` in ``scales``; shape (len(scales), n, n)."""
    gen = _as_generator(A)
    scales = np.asarray(scales, dtype=float).ravel()
    if np.any(scales < 0) or not np.all(np.isfinite(scales)):
        raise ValueError("scales must be finite and non-negative")
    n = gen.n
    out = np.empty((scales.size, n, n))
    zero = scales == 0.0
    out[zero] = np.eye(n) * rgamma(params.beta)
    rest = np.flatnonzero(~zero)
    if rest.size == 0:
        return out

    if gen.diagonalizable:
        z = scales[rest, None] * gen.eigenvalues[None, :]
        vals = mittag_leffler(params.alpha, params.beta, z)
        v, vinv = gen._eigvecs, gen._eigvecs_inv
        mats = np.einsum("ij,kj,jl->kil", v, vals, vinv)
        out[rest] = mats.real
        return out

    path = gen.path_for(params.alpha)
    for i in rest:
        xi = scales[i] ** (1.0 / params.alpha)
        try:
            out[i] = hankel_quadrature(params, xi, -gen.entries, path)
        except (SingularResolvent, SectorViolation) as exc:
            raise ContourFailure(f"matrix Mittag-Leffler evaluation failed: {exc}") from exc
    return out


# }}}
