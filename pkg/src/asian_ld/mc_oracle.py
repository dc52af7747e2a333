"""Independent engines used to validate the closed forms.

* Exact-in-distribution GBM Monte Carlo for prices and for the fluctuation
  moments of the discrete average.
* Direct optimisers of the discretised path functionals behind the MGF limit
  and the rate function.

Paths are generated in fixed-size batches, each with its own Philox stream
keyed by (seed, batch index), and merged in index order, so results do not
depend on the number of worker threads.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError
from .pricing import Flavor, OptionSpec, Style, bs_kernel
from .scaling import AveragingGrid, MarketParams, a_infinity, discount_factor
from .variational import rate_j

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class McConfig:
    """Simulation settings. With ``antithetic`` on, ``paths`` is rounded up to whole pairs."""

    paths: int = 100_000
    seed: int = 0
    antithetic: bool = True
    batch: int = 20_000
    workers: int = 1

    def __post_init__(self) -> None:
        if self.paths < 1:
            raise DomainError(f"paths must be >= 1, got {self.paths}")
        if self.batch < 2:
            raise DomainError(f"batch must be >= 2, got {self.batch}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean and its standard error.

    With antithetic sampling the standard error is computed from the pair
    averages, which are the independent samples.
    """

    mean: float
    stderr: float
    paths: int
    elapsed: float

    def zscore(self, reference: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == reference else math.copysign(math.inf, self.mean - reference)
        return (self.mean - reference) / self.stderr


@dataclass(frozen=True)
class MomentsEstimate:
    """Moments of A_n and of Y = sqrt(n)(A_n - A_inf)/S0, plus the terminal spot."""

    mean_average: McEstimate
    scaled_variance: McEstimate
    terminal_spot: McEstimate


# ---------------------------------------------------------------------------
# Streaming moments
# ---------------------------------------------------------------------------


@dataclass
class _Moments:
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, samples: np.ndarray) -> "_Moments":
        mean = samples.mean(axis=0)
        m2 = ((samples - mean) ** 2).sum(axis=0)
        # constant columns (e.g. sigma = 0) get exact moments, not rounding noise
        flat = np.ptp(samples, axis=0) == 0.0
        mean = np.where(flat, samples[0], mean)
        m2 = np.where(flat, 0.0, m2)
        return cls(samples.shape[0], mean, m2)

    def merge(self, other: "_Moments") -> "_Moments":
        # Chan et al. pairwise update
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return _Moments(n, mean, m2)

    def stderr(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.count - 1) / self.count)


def _batch_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _spot_paths(z: np.ndarray, market: MarketParams, grid: AveragingGrid) -> np.ndarray:
    drift = (market.rate - market.dividend - 0.5 * market.sigma**2) * grid.tau
    log_s = np.cumsum(drift + market.sigma * math.sqrt(grid.tau) * z, axis=1)
    return market.spot * np.exp(log_s)


def _simulate(market: MarketParams, grid: AveragingGrid, cfg: McConfig, stats):
    """Run the batches; ``stats`` maps a (paths, n) spot array to (paths, k) samples."""
    per_sample = 2 if cfg.antithetic else 1
    samples = -(-cfg.paths // per_sample)
    per_batch = max(1, cfg.batch // per_sample)
    n_batches = -(-samples // per_batch)

    def run(index: int) -> _Moments:
        size = min(per_batch, samples - index * per_batch)
        z = _batch_rng(cfg.seed, index).standard_normal((size, grid.n))
        out = stats(_spot_paths(z, market, grid))
        if cfg.antithetic:
            out = 0.5 * (out + stats(_spot_paths(-z, market, grid)))
        return _Moments.of(out)

    if cfg.workers > 1 and n_batches > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, range(n_batches)))
    else:
        parts = [run(i) for i in range(n_batches)]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total, samples * per_sample


# ---------------------------------------------------------------------------
# Prices and moments
# ---------------------------------------------------------------------------


def mc_price(spec: OptionSpec, market: MarketParams, grid: AveragingGrid, cfg: McConfig = McConfig()) -> McEstimate:
    """Discounted Monte Carlo price of a fixed- or floating-strike Asian option."""
    start = time.perf_counter()
    df = discount_factor(market, grid)
    call = spec.flavor is Flavor.CALL

    if spec.style is Style.FIXED:
        strike = spec.strike

        def stats(s):
            avg = s.mean(axis=1)
            pay = np.maximum(avg - strike, 0.0) if call else np.maximum(strike - avg, 0.0)
            return df * pay[:, None]

    else:
        kappa = spec.kappa

        def stats(s):
            diff = kappa * s[:, -1] - s.mean(axis=1)
            pay = np.maximum(diff, 0.0) if call else np.maximum(-diff, 0.0)
            return df * pay[:, None]

    mom, paths = _simulate(market, grid, cfg, stats)
    est = McEstimate(float(mom.mean[0]), float(mom.stderr()[0]), paths, time.perf_counter() - start)
    logger.debug("mc_price %s: %.6g +- %.2g (%d paths)", spec, est.mean, est.stderr, paths)
    return est


def mc_average_moments(market: MarketParams, grid: AveragingGrid, cfg: McConfig = McConfig()) -> MomentsEstimate:
    """Mean of A_n, variance of sqrt(n)(A_n - A_inf)/S0 about the known A_inf, and mean of S_T."""
    start = time.perf_counter()
    rho = (market.rate - market.dividend) * grid.maturity
    a_inf = a_infinity(market.spot, rho)
    root_n = math.sqrt(grid.n)

    def stats(s):
        avg = s.mean(axis=1)
        y = root_n * (avg - a_inf) / market.spot
        return np.column_stack([avg, y * y, s[:, -1]])

    mom, paths = _simulate(market, grid, cfg, stats)
    se = mom.stderr()
    elapsed = time.perf_counter() - start
    est = [McEstimate(float(mom.mean[k]), float(se[k]), paths, elapsed) for k in range(3)]
    return MomentsEstimate(*est)


def implied_vol_from_price(
    price: float, forward: float, strike: float, maturity: float, discount: float = 1.0, flavor=Flavor.CALL
) -> float:
    """Black-Scholes volatility reproducing ``price`` on ``forward``."""
    target = price / discount
    intrinsic = bs_kernel(forward, strike, 0.0, flavor)
    if not target > intrinsic:
        raise DomainError("price at or below intrinsic value")
    root_t = math.sqrt(maturity)

    def f(vol):
        return bs_kernel(forward, strike, vol * root_t, flavor) - target

    hi = 1.0
    while f(hi) < 0.0:
        hi *= 2.0
        if hi > 1e3:
            raise ConvergenceError("implied volatility above 1000")
    return brentq(f, 1e-12, hi, xtol=1e-15, rtol=1e-14)


# ---------------------------------------------------------------------------
# Discretised path functionals
# ---------------------------------------------------------------------------
#
# Both problems are posed in f = b g on the grid y_j = j h, h = 1/m, with
# f_0 = 0 and trapezoid weights w_j (1/2 at j = m) for int_0^1 e^f.


def _weights(m: int) -> np.ndarray:
    w = np.ones(m)
    w[-1] = 0.5
    return w


def _action(f: np.ndarray, rho: float, h: float) -> float:
    d = np.diff(f, prepend=0.0) / h - rho
    return 0.5 * h * float(d @ d)


def _action_grad(f: np.ndarray, rho: float, h: float) -> np.ndarray:
    d = np.diff(f, prepend=0.0) / h - rho
    g = d.copy()
    g[:-1] -= d[1:]
    return g


def _action_bands(m: int, h: float) -> np.ndarray:
    """Banded storage of the action Hessian: (1/h) tridiag(-1, 2, -1) with a free right end."""
    ab = np.zeros((3, m))
    ab[0, 1:] = -1.0 / h
    ab[1, :] = 2.0 / h
    ab[1, -1] = 1.0 / h
    ab[2, :-1] = -1.0 / h
    return ab


def _integral(f: np.ndarray, w: np.ndarray, h: float) -> float:
    return h * (0.5 + float(w @ np.exp(f)))


def _lambda_functional(a, b, rho, m, tol, max_iter):
    h = 1.0 / m
    w = _weights(m)
    y = h * np.arange(1, m + 1)
    f = rho * y
    base = _action_bands(m, h)

    def value(v):
        return -a * _integral(v, w, h) - _action(v, rho, h) / b**2

    val = value(f)
    for it in range(max_iter):
        ef = h * w * np.exp(f)
        grad = -a * ef - _action_grad(f, rho, h) / b**2
        # minimise -F: Hessian = action/b^2 + diag(a h w e^f), positive definite
        ab = base / b**2
        ab[1] += a * ef
        step = solve_banded((1, 1), ab, grad)
        decrement = float(grad @ step)
        t = 1.0
        while True:
            trial = f + t * step
            new = value(trial)
            if new >= val + 1e-4 * t * decrement or decrement < 1e-12 * max(1.0, abs(val)) or t < 1e-12:
                break
            t *= 0.5
        stalled = t < 1e-12
        f, val = trial, new
        # converged, or the remaining step is below rounding level
        if decrement < tol * max(1.0, abs(val)) or stalled or float(np.max(np.abs(step))) < 1e-13:
            return val, it + 1
    raise ConvergenceError(f"Newton ascent did not converge in {max_iter} iterations")


def brute_force_lambda_ab(
    a: float, b: float, rho: float, grid_points: int = 2000, richardson: bool = False, tol: float = 1e-18, max_iter: int = 100
) -> float:
    """sup_f { -a int e^f - (1/2b^2) int (f' - rho)^2 } over piecewise-linear f with f(0) = 0."""
    if a < 0.0 or not b > 0.0:
        raise DomainError("need a >= 0 and b > 0")
    if grid_points < 50:
        raise DomainError("grid_points must be >= 50")
    if a == 0.0:
        return 0.0
    coarse, _ = _lambda_functional(a, b, rho, grid_points, tol, max_iter)
    if not richardson:
        return coarse
    fine, _ = _lambda_functional(a, b, rho, 2 * grid_points, tol, max_iter)
    return (4.0 * fine - coarse) / 3.0


def brute_force_lambda(
    theta: float, spot: float, beta: float, rho: float, grid_points: int = 2000, richardson: bool = False
) -> float:
    """Discretised version of the supremum defining lim (1/n) log E[exp(theta n A_n)], theta <= 0."""
    if theta > 0.0:
        raise DomainError("theta must be <= 0")
    if not beta > 0.0:
        raise DomainError("beta must be > 0")
    return brute_force_lambda_ab(-theta * spot, math.sqrt(2.0 * beta), rho, grid_points, richardson)


def _exp_slope(x: float) -> float:
    """s with (e^s - 1)/s = x, the straight line meeting the constraint."""
    if abs(x - 1.0) < 1e-14:
        return 0.0

    def g(s):
        return (math.expm1(s) / s if s != 0.0 else 1.0) - x

    lo, hi = (-1.0, 0.0) if x < 1.0 else (0.0, 1.0)
    while g(lo) > 0.0:
        lo *= 2.0
    while g(hi) < 0.0:
        hi *= 2.0
    return brentq(g, lo, hi, xtol=1e-15)


def _penalty_min(f, rho, x, mu, pen, w, h, base, tol, max_iter):
    """Minimise action - mu c + (pen/2) c^2 with c = int e^f - x."""

    def merit(v):
        c = _integral(v, w, h) - x
        return _action(v, rho, h) - mu * c + 0.5 * pen * c * c

    val = merit(f)
    for _ in range(max_iter):
        ef = h * w * np.exp(f)
        c = _integral(f, w, h) - x
        coef = pen * c - mu
        grad = _action_grad(f, rho, h) + coef * ef
        step = None
        for clip in (False, True):
            ab = base.copy()
            ab[1] += (max(coef, 0.0) if clip else coef) * ef
            try:
                # (T + pen u u^T)^{-1} by Sherman-Morrison, u = ef
                s1 = solve_banded((1, 1), ab, -grad)
                s2 = solve_banded((1, 1), ab, ef)
            except np.linalg.LinAlgError:
                continue
            cand = s1 - s2 * (pen * float(ef @ s1) / (1.0 + pen * float(ef @ s2)))
            if np.all(np.isfinite(cand)) and float(grad @ cand) < 0.0:
                step = cand
                break
        if step is None:
            step = -grad
        slope = float(grad @ step)
        t = 1.0
        while True:
            trial = f + t * step
            new = merit(trial)
            # below rounding level the merit cannot rank steps; take the Newton step
            if new <= val + 1e-4 * t * slope or -slope < 1e-12 * max(1.0, abs(val)) or t < 1e-14:
                break
            t *= 0.5
        stalled = t < 1e-14
        f, val = trial, new
        if -slope < tol * max(1.0, abs(val)) or stalled or float(np.max(np.abs(step))) < 1e-13:
            break
    return f


def brute_force_rate(
    x_ratio: float,
    rho: float,
    grid_points: int = 2000,
    penalty_weight: float = 100.0,
    richardson: bool = False,
    tol: float = 1e-12,
    max_outer: int = 60,
) -> float:
    """min (1/2) int (f' - rho)^2 subject to int e^f = x_ratio, by augmented Lagrangian.

    The multiplier is warm-started from a finite-difference slope of the
    closed-form rate (the envelope theorem makes it the exact multiplier).
    """
    if not x_ratio > 0.0:
        raise DomainError(f"x_ratio must be > 0, got {x_ratio}")
    if grid_points < 50:
        raise DomainError("grid_points must be >= 50")
    coarse = _rate_functional(x_ratio, rho, grid_points, penalty_weight, tol, max_outer)
    if not richardson:
        return coarse
    fine = _rate_functional(x_ratio, rho, 2 * grid_points, penalty_weight, tol, max_outer)
    return (4.0 * fine - coarse) / 3.0


def _rate_functional(x, rho, m, pen, tol, max_outer):
    h = 1.0 / m
    w = _weights(m)
    y = h * np.arange(1, m + 1)
    base = _action_bands(m, h)
    f = _exp_slope(x) * y
    try:
        eps = 1e-6 * x
        mu = (rate_j(x + eps, rho).value - rate_j(x - eps, rho).value) / (2.0 * eps)
    except Exception:  # warm start only
        mu = 0.0
    for _ in range(max_outer):
        f = _penalty_min(f, rho, x, mu, pen, w, h, base, 1e-20, 200)
        c = _integral(f, w, h) - x
        mu -= pen * c
        grad = _action_grad(f, rho, h) - mu * h * w * np.exp(f)
        if abs(c) < tol * max(1.0, x) and float(np.max(np.abs(grad))) < 1e-10:
            return _action(f, rho, h)
    raise ConvergenceError("augmented Lagrangian did not converge")
