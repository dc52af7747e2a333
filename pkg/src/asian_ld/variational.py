"""Closed-form solutions of the path-space variational problems.

Both the large-deviation rate of the discrete average and the limiting
log-MGF reduce to the Euler-Lagrange equation f'' = c e^f with f(0) = 0 and
f'(1) = rho. Its two solution families are parameterised by a root:

* hyperbolic (sinh/cosh), root ``delta`` >= 0,
* trigonometric (sin/cos), root ``xi`` in (0, xi_max).

Writing z = 2 xi = i delta both families become one analytic function of
w = z**2 (w < 0 hyperbolic, w > 0 trigonometric). Near w = 0 the closed forms
are 0/0 and are replaced by Taylor series in w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError

_EPS = np.finfo(float).eps
# Largest delta tried when bracketing; sinh(700) is still finite.
_DELTA_CAP = 700.0
# points in the coarse xi uniqueness scan
_XI_SCAN = 65


class Branch(str, Enum):
    HYPERBOLIC = "hyperbolic"
    TRIGONOMETRIC = "trigonometric"
    SERIES_BOUNDARY = "series"
    INFINITE = "infinite"


@dataclass(frozen=True)
class RateValue:
    """A rate-function or log-MGF value together with how it was obtained.

    ``root`` is delta (hyperbolic) or xi (trigonometric); 0 on the series
    boundary. ``residual`` is the relative residual of the root equation.
    """

    value: float
    branch: Branch
    root: float = 0.0
    residual: float = 0.0
    iterations: int = 0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


@dataclass(frozen=True)
class VariationalConfig:
    root_tol: float = 1e-15
    series_threshold: float = 1e-4
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.root_tol > 0.0:
            raise DomainError("root_tol must be > 0")
        if not self.series_threshold > 0.0:
            raise DomainError("series_threshold must be > 0")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


DEFAULT_CONFIG = VariationalConfig()

INFINITE_RATE = RateValue(value=math.inf, branch=Branch.INFINITE)


# ---------------------------------------------------------------------------
# Constraint integrals T(root) = int_0^1 e^{f(y)} dy
# ---------------------------------------------------------------------------


def _t_series(w, rho):
    # sin z/z + 2 rho sin^2(z/2)/z^2 in powers of w = z^2
    return (1.0 + rho / 2.0) - w * (1.0 / 6.0 + rho / 24.0) + w * w * (1.0 / 120.0 + rho / 720.0) - w**3 * (
        1.0 / 5040.0 + rho / 40320.0
    )


def t_hyperbolic(delta, rho, threshold=DEFAULT_CONFIG.series_threshold):
    """sinh(delta)/delta + (2 rho/delta^2) sinh^2(delta/2); even in delta.

    Evaluated as (2 sinh(d/2)/d) [e^{d/2}(d + rho) + e^{-d/2}(d - rho)]/(2d),
    which avoids cancelling exponentials for large negative rho.
    """
    delta = np.asarray(delta, dtype=float)
    small = np.abs(delta) < threshold
    d = np.where(small, 1.0, np.abs(delta))
    u = d / 2.0
    direct = (np.sinh(u) / u) * (np.exp(u) * (d + rho) + np.exp(-u) * (d - rho)) / (2.0 * d)
    out = np.where(small, _t_series(-(delta**2), rho), direct)
    return out if out.ndim else float(out)


def t_trigonometric(xi, rho, threshold=DEFAULT_CONFIG.series_threshold):
    """sin(2 xi)/(2 xi) (1 + (rho/2) tan(xi)/xi), written without tan."""
    xi = np.asarray(xi, dtype=float)
    small = np.abs(xi) < threshold
    x = np.where(small, 1.0, xi)
    direct = np.sin(2.0 * x) / (2.0 * x) + rho * (np.sin(x) / x) ** 2 / 2.0
    out = np.where(small, _t_series(4.0 * xi**2, rho), direct)
    return out if out.ndim else float(out)


def xi_max(rho: float) -> float:
    """Smallest positive root of 2 xi cos(xi) + rho sin(xi) = 0.

    This is the right end of the trigonometric bracket; the trigonometric
    family does not exist for rho <= -2 and 0 is returned there.
    """
    if rho == 0.0:
        return math.pi / 2.0
    if rho <= -2.0:
        return 0.0

    def h(x):
        return 2.0 * x * math.cos(x) + rho * math.sin(x)

    if rho > 0.0:
        lo, hi = math.pi / 2.0, math.pi
    else:
        lo, hi = 0.0, math.pi / 2.0
        # h(x) ~ (2 + rho) x near 0; move off the trivial root
        lo = min(1e-8, hi / 2.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if (h(mid) > 0.0) == (h(lo) > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Rate-function branches
# ---------------------------------------------------------------------------


def _j_series(w, rho):
    """Unified rate function expanded around w = 0 (the branch boundary)."""
    p = rho
    j0 = p * p * (p + 4.0) / (2.0 * (p + 2.0)) - 2.0 * p * np.log1p(p / 2.0)
    j2 = p * p * (p + 4.0) / (12.0 * (p + 2.0) ** 2)
    j4 = (p**4 + 18 * p**3 + 132 * p**2 + 360 * p + 480) / (1440.0 * (p + 2.0) ** 3)
    j6 = (p**5 + 26 * p**4 + 288 * p**3 + 1656 * p**2 + 4536 * p + 6048) / (90720.0 * (p + 2.0) ** 4)
    return j0 + w * (j2 + w * (j4 + w * j6))


def j_hyperbolic(delta, rho):
    """Hyperbolic-branch rate 0.5 (d^2 - rho^2)(1 - 2 tanh(d/2)/(d + rho tanh(d/2)))
    - 2 rho log[cosh(d/2) + (rho/d) sinh(d/2)] + rho^2.

    Evaluated around the zero at d = rho (the branch is even in d, so d is
    taken with the sign of rho): both terms are O(d - rho) there and are
    computed with expm1/log1p so that their O((d - rho)^2) sum keeps full
    relative precision.
    """
    delta = np.asarray(delta, dtype=float)
    sgn = 1.0 if rho >= 0.0 else -1.0
    d = sgn * np.abs(delta)
    eps = d - rho
    t = np.tanh(d / 2.0)
    term1 = 0.5 * eps * (d + rho) * (1.0 - 2.0 * t / (d + rho * t))
    q = ((d + rho) * np.expm1(eps / 2.0) + eps * np.expm1(-rho - eps / 2.0)) / (2.0 * d)
    out = term1 - 2.0 * rho * np.log1p(q)
    return out if out.ndim else float(out)


def j_trigonometric(xi, rho):
    """Trigonometric-branch rate 2 (xi^2 + rho^2/4)(tan xi/(xi + (rho/2) tan xi) - 1)
    - 2 rho log(cos xi + (rho/2 xi) sin xi) + rho^2, written without tan."""
    xi = np.asarray(xi, dtype=float)
    s, c = np.sin(xi), np.cos(xi)
    out = (
        2.0 * (xi * xi + rho * rho / 4.0) * (s / (xi * c + 0.5 * rho * s) - 1.0)
        - 2.0 * rho * np.log(c + rho * s / (2.0 * xi))
        + rho * rho
    )
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Scalar root solvers (Brent on a bracket)
# ---------------------------------------------------------------------------


def _brent(f, lo, hi, cfg: VariationalConfig):
    try:
        root, info = brentq(
            f, lo, hi, xtol=1e-300, rtol=max(cfg.root_tol, 4.0 * _EPS), maxiter=cfg.max_iter, full_output=True
        )
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc
    if not info.converged:
        raise ConvergenceError(f"root search did not converge in {cfg.max_iter} iterations")
    return root, info.iterations


def _solve_delta(x_ratio: float, rho: float, cfg: VariationalConfig):
    boundary = 1.0 + rho / 2.0
    if not x_ratio >= boundary:
        raise DomainError(f"hyperbolic branch needs x_ratio >= 1 + rho/2 = {boundary}, got {x_ratio}")
    thr = cfg.series_threshold

    def f(d):
        return t_hyperbolic(d, rho, thr) - x_ratio

    if f(0.0) >= 0.0:
        return 0.0, 0
    hi = 1.0
    while f(hi) <= 0.0:
        hi *= 2.0
        if hi > _DELTA_CAP:
            raise DomainError(f"x_ratio {x_ratio} too large to bracket")
    return _brent(f, 0.0, hi, cfg)


def _solve_xi(x_ratio: float, rho: float, cfg: VariationalConfig):
    boundary = 1.0 + rho / 2.0
    if not (0.0 < x_ratio <= boundary):
        raise DomainError(f"trigonometric branch needs 0 < x_ratio <= 1 + rho/2 = {boundary}, got {x_ratio}")
    thr = cfg.series_threshold
    top = xi_max(rho)

    def f(x):
        return t_trigonometric(x, rho, thr) - x_ratio

    if f(0.0) <= 0.0:
        return 0.0, 0
    if f(top) >= 0.0:
        raise ConvergenceError(f"no sign change on (0, xi_max) for x_ratio={x_ratio}")
    # uniqueness guard: a coarse scan must see exactly one sign change
    vals = np.sign(t_trigonometric(np.linspace(0.0, top, _XI_SCAN), rho, thr) - x_ratio)
    vals = vals[vals != 0.0]
    if np.count_nonzero(vals[1:] != vals[:-1]) > 1:
        raise ConvergenceError(f"multiple xi roots on (0, xi_max) for x_ratio={x_ratio}, rho={rho}")
    return _brent(f, 0.0, top, cfg)


def solve_delta_fixed(x_ratio: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> float:
    """Nonnegative delta with T_hyp(delta) = x_ratio (needs x_ratio >= 1 + rho/2)."""
    return _solve_delta(x_ratio, rho, cfg)[0]


def solve_xi_fixed(x_ratio: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> float:
    """xi in [0, xi_max) with T_trig(xi) = x_ratio (needs 0 < x_ratio <= 1 + rho/2)."""
    return _solve_xi(x_ratio, rho, cfg)[0]


# Accepted relative residual of the constraint T(root) = x.
RESIDUAL_TOL = 1e-12


def _residual(t_func, root: float, x_ratio: float) -> float:
    """Relative constraint residual at ``root``.

    Where T is so steep that one ulp of the root moves T by more than the
    tolerance, a sign change within a few ulps is accepted instead.
    """
    resid = abs(t_func(root) - x_ratio) / max(1.0, abs(x_ratio))
    if resid <= RESIDUAL_TOL:
        return resid
    step = 8.0 * _EPS * max(abs(root), 1e-300)
    below, above = t_func(root - step) - x_ratio, t_func(root + step) - x_ratio
    if below * above <= 0.0:
        return resid
    raise ConvergenceError(f"constraint residual {resid:.3g} exceeds {RESIDUAL_TOL:g} at x_ratio={x_ratio}")


def rate_j(x_ratio: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> RateValue:
    """Normalised rate function J(x/S0, rho) of the discrete average.

    Raises DomainError for x_ratio <= 0; use :func:`rate_i` when an infinite
    rate should be returned as a value instead.
    """
    if not x_ratio > 0.0:
        raise DomainError(f"x_ratio must be > 0, got {x_ratio}")
    thr = cfg.series_threshold
    if x_ratio >= 1.0 + rho / 2.0:
        root, its = _solve_delta(x_ratio, rho, cfg)
        resid = _residual(lambda v: t_hyperbolic(v, rho, thr), root, x_ratio)
        if root < thr:
            return RateValue(float(_j_series(-root * root, rho)), Branch.SERIES_BOUNDARY, root, resid, its)
        return RateValue(max(j_hyperbolic(root, rho), 0.0), Branch.HYPERBOLIC, root, resid, its)
    root, its = _solve_xi(x_ratio, rho, cfg)
    resid = _residual(lambda v: t_trigonometric(v, rho, thr), root, x_ratio)
    if root < thr:
        return RateValue(float(_j_series(4.0 * root * root, rho)), Branch.SERIES_BOUNDARY, root, resid, its)
    return RateValue(max(j_trigonometric(root, rho), 0.0), Branch.TRIGONOMETRIC, root, resid, its)


def rate_i(x: float, spot: float, beta: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> float:
    """Rate function I(x) = J(x/S0, rho) / (2 beta); +inf for x <= 0."""
    if not beta > 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if spot <= 0.0:
        raise DomainError(f"spot must be > 0, got {spot}")
    if x <= 0.0:
        return math.inf
    return rate_j(x / spot, rho, cfg).value / (2.0 * beta)


def floating_rate_h0(kappa: float, beta: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> float:
    """Floating-strike rate H(0; rho) = I(kappa S0; -rho) = J(kappa, -rho) / (2 beta)."""
    if not kappa > 0.0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    if not beta > 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    return rate_j(kappa, -rho, cfg).value / (2.0 * beta)


# ---------------------------------------------------------------------------
# Vectorised rate function (bisection), used for curves and dense grids
# ---------------------------------------------------------------------------


def _bisect(f, lo, hi, iters=200):
    """Elementwise bisection for decreasing-to-increasing sign change f(lo) < 0 < f(hi)."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = f(mid) < 0.0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
        if np.all(hi - lo <= 2.0 * _EPS * np.abs(hi)):
            break
    return 0.5 * (lo + hi)


def rate_j_array(x_ratio, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """J(x, rho) for an array of x; +inf where x <= 0.

    Independent of :func:`rate_j`'s Brent path: roots are found by elementwise
    bisection, so the two routes can be cross-checked.
    """
    x = np.atleast_1d(np.asarray(x_ratio, dtype=float))
    out = np.full(x.shape, np.inf)
    thr = cfg.series_threshold
    boundary = 1.0 + rho / 2.0

    hyp = x >= boundary
    if np.any(hyp):
        xs = x[hyp]
        hi = np.ones_like(xs)
        while True:
            short = t_hyperbolic(hi, rho, thr) <= xs
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
            if np.any(hi > _DELTA_CAP):
                raise DomainError("x_ratio too large to bracket")
        d = _bisect(lambda v: t_hyperbolic(v, rho, thr) - xs, np.zeros_like(xs), hi)
        d = np.where(t_hyperbolic(0.0, rho, thr) >= xs, 0.0, d)
        small = d < thr
        val = j_hyperbolic(np.where(small, 1.0, d), rho)
        if np.any(small):
            val = np.where(small, _j_series(-(d**2), rho), val)
        out[hyp] = np.maximum(val, 0.0)

    trig = (x > 0.0) & ~hyp
    if np.any(trig):
        xs = x[trig]
        top = xi_max(rho)
        # T_trig is decreasing, so bisect on x - T to get an increasing function
        g = _bisect(
            lambda v: xs - t_trigonometric(v, rho, thr), np.zeros_like(xs), np.full_like(xs, top)
        )
        small = g < thr
        val = j_trigonometric(np.where(small, 1.0, g), rho)
        if np.any(small):
            val = np.where(small, _j_series(4.0 * g**2, rho), val)
        out[trig] = np.maximum(val, 0.0)
    return out


def rate_i_array(x, spot: float, beta: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> np.ndarray:
    if not beta > 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    return rate_j_array(np.asarray(x, dtype=float) / spot, rho, cfg) / (2.0 * beta)


# ---------------------------------------------------------------------------
# Limiting log-MGF lambda(a, b; rho)
# ---------------------------------------------------------------------------


def _c_factor(w, rho):
    """cos(z/2) + rho sin(z/2)/z as a function of w = z^2 (real for both signs)."""
    if abs(w) < 1e-8:
        return (1.0 + rho / 2.0) - w * (1.0 / 8.0 + rho / 48.0) + w * w * (1.0 / 384.0 + rho / 3840.0)
    if w > 0.0:
        z = math.sqrt(w)
        return math.cos(z / 2.0) + rho * math.sin(z / 2.0) / z
    d = math.sqrt(-w)
    return math.cosh(d / 2.0) + rho * math.sinh(d / 2.0) / d


def _lambda_series(w, a, b, rho):
    p = rho
    b2 = b * b
    l0 = a * (p * p - 4.0) / 4.0 + (2.0 * p * math.log1p(p / 2.0) - p * p) / b2
    l2 = (a * b2 * (p + 2.0) * (-p * p - 4.0 * p + 4.0) - 4.0 * p * p - 24.0 * p) / (48.0 * b2 * (p + 2.0))
    l4 = (a * b2 * (p + 2.0) ** 2 * (p * p + 8.0 * p + 6.0) - p**3 - 12.0 * p * p - 60.0 * p) / (
        1440.0 * b2 * (p + 2.0) ** 2
    )
    return l0 + w * (l2 + w * l4)


def lambda_hyperbolic(delta: float, a: float, b: float, rho: float) -> float:
    d = delta
    sh = math.sinh(d / 2.0)
    brace = 1.0 + sh * sh * (1.0 - 4.0 * rho / d**2 + rho * rho / d**2) - (2.0 - rho) / d * math.sinh(d)
    return a * brace + 2.0 * rho / b**2 * math.log(math.cosh(d / 2.0) + rho / d * sh) - rho * rho / b**2


def lambda_trigonometric(xi: float, a: float, b: float, rho: float) -> float:
    s = math.sin(xi)
    brace = 1.0 - s * s * (1.0 + rho / xi**2 - rho * rho / (4.0 * xi**2)) + (rho - 2.0) / (2.0 * xi) * math.sin(2.0 * xi)
    return a * brace + 2.0 * rho / b**2 * math.log(math.cos(xi) + rho / (2.0 * xi) * s) - rho * rho / b**2


def lambda_branch_threshold(rho: float) -> float:
    """Value of a b^2 separating the two branches: 2 rho^2 / (2 + rho)^2."""
    return 2.0 * rho * rho / (2.0 + rho) ** 2


def lambda_mgf(a: float, b: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> RateValue:
    """lambda(a, b; rho) = sup_g { -a int e^{b g} - (1/2) int (g' - rho/b)^2 }, a, b > 0.

    The branch is fixed by comparing a b^2 with 2 rho^2/(2 + rho)^2, the value
    at which both root equations degenerate to root 0.
    """
    if not a > 0.0:
        raise DomainError(f"a must be > 0, got {a}")
    if not b > 0.0:
        raise DomainError(f"b must be > 0, got {b}")
    if rho <= -2.0:
        raise DomainError(f"rho must be > -2 for the MGF limit, got {rho}")
    c = a * b * b
    thr = cfg.series_threshold
    tie = lambda_branch_threshold(rho)

    if c == tie:
        return RateValue(_lambda_series(0.0, a, b, rho), Branch.SERIES_BOUNDARY, 0.0, 0.0, 0)

    if c < tie:
        # rho^2 - delta^2 = 2 a b^2 C(delta)^2 on (0, |rho|)
        def f(d):
            return rho * rho - d * d - 2.0 * c * _c_factor(-d * d, rho) ** 2

        root, its = _brent(f, 0.0, abs(rho), cfg)
        resid = abs(f(root)) / max(1.0, rho * rho)
        if root < thr:
            return RateValue(_lambda_series(-root * root, a, b, rho), Branch.SERIES_BOUNDARY, root, resid, its)
        return RateValue(lambda_hyperbolic(root, a, b, rho), Branch.HYPERBOLIC, root, resid, its)

    # 2 xi^2 (4 xi^2 + rho^2) = a b^2 (2 xi cos xi + rho sin xi)^2, divided by xi^2
    def g(x):
        return 2.0 * (4.0 * x * x + rho * rho) - 4.0 * c * _c_factor(4.0 * x * x, rho) ** 2

    top = xi_max(rho)
    root, its = _brent(g, 0.0, top, cfg)
    resid = abs(g(root)) / max(1.0, 2.0 * (4.0 * root * root + rho * rho))
    if root < thr:
        return RateValue(_lambda_series(4.0 * root * root, a, b, rho), Branch.SERIES_BOUNDARY, root, resid, its)
    return RateValue(lambda_trigonometric(root, a, b, rho), Branch.TRIGONOMETRIC, root, resid, its)


def mgf_log_limit(theta: float, spot: float, beta: float, rho: float, cfg: VariationalConfig = DEFAULT_CONFIG) -> float:
    """lim (1/n) log E[exp(theta n A_n)]: +inf for theta > 0, lambda(-theta S0, sqrt(2 beta); rho) otherwise."""
    if not beta > 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if theta > 0.0:
        return math.inf
    if theta == 0.0:
        return 0.0
    return lambda_mgf(-theta * spot, math.sqrt(2.0 * beta), rho, cfg).value
