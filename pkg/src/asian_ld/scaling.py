"""Market inputs, the scaled (beta, rho) coordinates and the closed-form
limit quantities of the discrete average.

Every asymptotic formula in the package is written in terms of

    beta = sigma**2 * tau * n**2 / 2,    rho = (r - q) * tau * n,

which stay fixed while the number of fixings ``n`` grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Below this |rho| the Taylor expansions are used instead of the closed forms.
SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes inputs: spot, risk-free rate, dividend yield, volatility."""

    spot: float
    rate: float = 0.0
    dividend: float = 0.0
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.spot) and self.spot > 0.0):
            raise DomainError(f"spot must be finite and > 0, got {self.spot}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise DomainError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (math.isfinite(self.rate) and math.isfinite(self.dividend)):
            raise DomainError("rate and dividend must be finite")


@dataclass(frozen=True)
class AveragingGrid:
    """Uniform fixing grid t_i = i * tau, i = 1..n."""

    n: int
    tau: float

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be an integer >= 1, got {self.n}")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise DomainError(f"tau must be finite and > 0, got {self.tau}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_maturity(cls, maturity: float, n: int = 250) -> "AveragingGrid":
        if not maturity > 0.0:
            raise DomainError(f"maturity must be > 0, got {maturity}")
        return cls(n=n, tau=maturity / n)

    @property
    def maturity(self) -> float:
        return self.n * self.tau

    def fixing_times(self) -> np.ndarray:
        return self.tau * np.arange(1, self.n + 1)


@dataclass(frozen=True)
class ScaledParams:
    """The (beta, rho) pair. Can be built directly or from a market and grid."""

    beta: float
    rho: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise DomainError(f"beta must be finite and >= 0, got {self.beta}")
        if not math.isfinite(self.rho):
            raise DomainError(f"rho must be finite, got {self.rho}")

    @classmethod
    def from_market(cls, market: MarketParams, grid: AveragingGrid) -> "ScaledParams":
        return scaled_params(market, grid)

    def sigma(self, grid: AveragingGrid) -> float:
        """Volatility implied by beta on ``grid`` (inverse of the beta map)."""
        return math.sqrt(2.0 * self.beta / (grid.tau * grid.n**2))


def scaled_params(market: MarketParams, grid: AveragingGrid) -> ScaledParams:
    n, tau = grid.n, grid.tau
    beta = 0.5 * market.sigma**2 * tau * n * n
    rho = (market.rate - market.dividend) * tau * n
    return ScaledParams(beta=beta, rho=rho)


def discount_factor(market: MarketParams, grid: AveragingGrid) -> float:
    """e^{-r T} from primitive inputs (no division by r - q)."""
    return math.exp(-market.rate * grid.maturity)


# ---------------------------------------------------------------------------
# phi-functions: phi_k(x) = (e^x - sum_{j<k} x^j / j!) / x^k, evaluated without
# cancellation. They make the closed forms below stable for every rho.
# ---------------------------------------------------------------------------


def _phi(k: int, x: float) -> float:
    if abs(x) < 1.0:
        # sum_{j>=0} x^j / (j + k)!
        term = 1.0 / math.factorial(k)
        total = term
        for j in range(1, 40):
            term *= x / (j + k)
            total += term
            if abs(term) < 1e-17 * abs(total):
                break
        return total
    val = math.exp(x)
    for j in range(k):
        val = (val - 1.0 / math.factorial(j)) / x
    return val


def a_infinity(spot: float, rho: float) -> float:
    """Almost-sure limit of the discrete average, S0 (e^rho - 1) / rho."""
    if spot <= 0.0:
        raise DomainError(f"spot must be > 0, got {spot}")
    if abs(rho) < SERIES_THRESHOLD:
        return spot * (1.0 + rho / 2.0 + rho * rho / 6.0 + rho**3 / 24.0)
    return spot * math.expm1(rho) / rho


def fluctuation_variance(rho: float) -> float:
    """v(rho): limiting variance of sqrt(n)(A_n - A_inf)/S0, divided by 2 beta.

    The closed form is a difference of exponentials over rho^3; it is rewritten
    through phi-functions as 1/3 + rho (8 phi3(2 rho) - 24 phi4(2 rho) + 2 phi4(rho)).
    """
    if abs(rho) < SERIES_THRESHOLD:
        return 1.0 / 3.0 + rho * (5.0 / 12.0 + rho * (17.0 / 60.0 + rho * 49.0 / 360.0))
    return 1.0 / 3.0 + rho * (8.0 * _phi(3, 2.0 * rho) - 24.0 * _phi(4, 2.0 * rho) + 2.0 * _phi(4, rho))


def fluctuation_variance_direct(rho: float) -> float:
    """The textbook closed form, kept for comparison; unstable as rho -> 0."""
    e2 = math.exp(2.0 * rho)
    return (rho * e2 - 1.5 * e2 + 2.0 * math.exp(rho) - 0.5) / rho**3


def discrete_forward(spot: float, rho: float, n: int) -> float:
    """E[A_n] = (S0/n) sum_{i=1}^n e^{rho i/n}, in geometric-sum form."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if rho == 0.0:
        return spot
    # (e^rho - 1) / (n (1 - e^{-rho/n})) = phi1(rho) / phi1(-rho/n)
    return spot * _phi(1, rho) / _phi(1, -rho / n)


def floating_atm_variance(beta: float, rho: float) -> float:
    """Variance s^2 of the limiting normal law of the at-the-money floating payoff.

    s^2 = (2 beta / rho^2) [1 - (2/rho)(e^rho - 1) + (e^{2 rho} - 1)/(2 rho)]
        = 4 beta (2 phi3(2 rho) - phi3(rho)).
    """
    if beta < 0.0:
        raise DomainError(f"beta must be >= 0, got {beta}")
    if abs(rho) < SERIES_THRESHOLD:
        return 2.0 * beta * (1.0 / 3.0 + rho * (0.25 + rho * (7.0 / 60.0 + rho / 24.0)))
    return 4.0 * beta * (2.0 * _phi(3, 2.0 * rho) - _phi(3, rho))
