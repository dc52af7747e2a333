"""Asymptotic prices and equivalent implied volatilities of Asian options.

The headline pricer feeds the strike-dependent equivalent log-normal volatility

    Sigma_LN(K)^2 = sigma^2 * log(K/A_inf)^2 / (2 J(K/S0, rho))

into Black-Scholes with forward A_inf. Floating-strike options are priced
through the same machinery in an auxiliary market where rate and dividend
swap roles (so rho -> -rho and the discount becomes e^{-qT}).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from scipy.special import ndtr

from .errors import DomainError, RegimeError
from .scaling import (
    AveragingGrid,
    MarketParams,
    a_infinity,
    discount_factor,
    floating_atm_variance,
    fluctuation_variance,
    scaled_params,
)
from .variational import DEFAULT_CONFIG, RateValue, VariationalConfig, rate_i, rate_j

logger = logging.getLogger(__name__)

# |log(K/A_inf)| below this routes to the at-the-money limit formulas.
ATM_THRESHOLD = 1e-6

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Style(str, Enum):
    FIXED = "fixed"
    FLOATING = "floating"


class Flavor(str, Enum):
    CALL = "call"
    PUT = "put"


class Regime(str, Enum):
    OTM = "OTM"
    ATM = "ATM"
    ITM = "ITM"


@dataclass(frozen=True)
class OptionSpec:
    """Fixed strike pays (A_n - K)^+ / (K - A_n)^+; floating pays
    (kappa S_T - A_n)^+ (call) / (A_n - kappa S_T)^+ (put)."""

    style: Style
    flavor: Flavor
    strike: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "style", Style(self.style))
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        if self.style is Style.FIXED:
            if self.strike is None or self.kappa is not None:
                raise DomainError("fixed-strike spec needs strike and no kappa")
            if not (math.isfinite(self.strike) and self.strike > 0.0):
                raise DomainError(f"strike must be finite and > 0, got {self.strike}")
        else:
            if self.kappa is None or self.strike is not None:
                raise DomainError("floating-strike spec needs kappa and no strike")
            if not (math.isfinite(self.kappa) and self.kappa > 0.0):
                raise DomainError(f"kappa must be finite and > 0, got {self.kappa}")

    @classmethod
    def fixed(cls, strike: float, flavor: Flavor | str = Flavor.CALL) -> "OptionSpec":
        return cls(Style.FIXED, Flavor(flavor), strike=strike)

    @classmethod
    def floating(cls, kappa: float, flavor: Flavor | str = Flavor.CALL) -> "OptionSpec":
        return cls(Style.FLOATING, Flavor(flavor), kappa=kappa)


@dataclass(frozen=True)
class PriceResult:
    price: float
    regime: Regime
    implied_ln_vol: float
    implied_n_vol: float
    decay_rate: Optional[float]
    diagnostics: Optional[RateValue]
    forward: float
    discount: float


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _npdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def bs_kernel(forward: float, strike: float, vol_sqrt_t: float, flavor: Flavor | str = Flavor.CALL) -> float:
    """Undiscounted Black-Scholes value on a forward."""
    flavor = Flavor(flavor)
    if forward <= 0.0 or strike <= 0.0:
        raise DomainError("forward and strike must be > 0")
    if vol_sqrt_t < 0.0:
        raise DomainError("vol_sqrt_t must be >= 0")
    if vol_sqrt_t == 0.0:
        diff = forward - strike if flavor is Flavor.CALL else strike - forward
        return max(diff, 0.0)
    d1 = math.log(forward / strike) / vol_sqrt_t + 0.5 * vol_sqrt_t
    d2 = d1 - vol_sqrt_t
    if flavor is Flavor.CALL:
        return float(forward * ndtr(d1) - strike * ndtr(d2))
    return float(strike * ndtr(-d2) - forward * ndtr(-d1))


def bachelier_kernel(
    forward: float, strike: float, normal_vol_sqrt_t: float, flavor: Flavor | str = Flavor.CALL
) -> float:
    """Undiscounted Bachelier (normal model) value on a forward."""
    flavor = Flavor(flavor)
    if normal_vol_sqrt_t < 0.0:
        raise DomainError("normal_vol_sqrt_t must be >= 0")
    diff = forward - strike if flavor is Flavor.CALL else strike - forward
    if normal_vol_sqrt_t == 0.0:
        return max(diff, 0.0)
    d = diff / normal_vol_sqrt_t
    return float(diff * ndtr(d) + normal_vol_sqrt_t * _npdf(d))


def bs_vega(forward: float, strike: float, vol: float, maturity: float, discount: float = 1.0) -> float:
    """dPrice/dvol of the discounted Black-Scholes value (per unit of vol)."""
    sqrt_t = math.sqrt(maturity)
    vst = vol * sqrt_t
    if vst == 0.0:
        return 0.0
    d1 = math.log(forward / strike) / vst + 0.5 * vst
    return discount * forward * sqrt_t * _npdf(d1)


# ---------------------------------------------------------------------------
# Equivalent implied volatilities
# ---------------------------------------------------------------------------


def _lognormal_vol(strike, market, grid, cfg):
    if not strike > 0.0:
        raise DomainError(f"strike must be > 0, got {strike}")
    sp = scaled_params(market, grid)
    fwd = a_infinity(market.spot, sp.rho)
    log_m = math.log(strike / fwd)
    if abs(log_m) < ATM_THRESHOLD:
        return market.sigma * market.spot / fwd * math.sqrt(fluctuation_variance(sp.rho)), None
    rv = rate_j(strike / market.spot, sp.rho, cfg)
    return market.sigma * math.sqrt(0.5 * log_m * log_m / rv.value), rv


def _normal_vol(strike, market, grid, cfg):
    if not strike > 0.0:
        raise DomainError(f"strike must be > 0, got {strike}")
    sp = scaled_params(market, grid)
    fwd = a_infinity(market.spot, sp.rho)
    if abs(math.log(strike / fwd)) < ATM_THRESHOLD:
        return market.sigma * market.spot * math.sqrt(fluctuation_variance(sp.rho)), None
    rv = rate_j(strike / market.spot, sp.rho, cfg)
    return market.sigma * math.sqrt(0.5 * (strike - fwd) ** 2 / rv.value), rv


def implied_lognormal_vol(
    strike: float, market: MarketParams, grid: AveragingGrid, cfg: VariationalConfig = DEFAULT_CONFIG
) -> float:
    """Equivalent log-normal volatility Sigma_LN(K); sigma (S0/A_inf) sqrt(v) at the money."""
    return _lognormal_vol(strike, market, grid, cfg)[0]


def implied_normal_vol(
    strike: float, market: MarketParams, grid: AveragingGrid, cfg: VariationalConfig = DEFAULT_CONFIG
) -> float:
    """Equivalent normal (Bachelier) volatility Sigma_N(K); sigma S0 sqrt(v) at the money."""
    return _normal_vol(strike, market, grid, cfg)[0]


# ---------------------------------------------------------------------------
# Fixed strike
# ---------------------------------------------------------------------------


def _regime(strike: float, forward: float, flavor: Flavor) -> Regime:
    log_m = math.log(strike / forward)
    if abs(log_m) < ATM_THRESHOLD:
        return Regime.ATM
    call_otm = log_m > 0.0
    if flavor is Flavor.CALL:
        return Regime.OTM if call_otm else Regime.ITM
    return Regime.ITM if call_otm else Regime.OTM


def fixed_regime(spec: OptionSpec, market: MarketParams, grid: AveragingGrid) -> Regime:
    _require_style(spec, Style.FIXED)
    rho = scaled_params(market, grid).rho
    return _regime(spec.strike, a_infinity(market.spot, rho), spec.flavor)


def _require_style(spec: OptionSpec, style: Style) -> None:
    if spec.style is not style:
        raise DomainError(f"expected a {style.value}-strike spec, got {spec.style.value}")


def _decay(strike, market, grid, cfg) -> float:
    sp = scaled_params(market, grid)
    if sp.beta == 0.0:
        return math.inf
    return grid.n * rate_i(strike, market.spot, sp.beta, sp.rho, cfg)


def price_fixed(
    spec: OptionSpec, market: MarketParams, grid: AveragingGrid, cfg: VariationalConfig = DEFAULT_CONFIG
) -> PriceResult:
    """Price = e^{-rT} BS(A_inf, K, Sigma_LN(K) sqrt(T))."""
    _require_style(spec, Style.FIXED)
    strike = spec.strike
    sp = scaled_params(market, grid)
    fwd = a_infinity(market.spot, sp.rho)
    df = discount_factor(market, grid)
    sig_ln, rv = _lognormal_vol(strike, market, grid, cfg)
    sig_n, _ = _normal_vol(strike, market, grid, cfg)
    price = df * bs_kernel(fwd, strike, sig_ln * math.sqrt(grid.maturity), spec.flavor)
    regime = _regime(strike, fwd, spec.flavor)
    decay = _decay(strike, market, grid, cfg) if regime is Regime.OTM else None
    logger.debug("fixed %s K=%g rho=%g Sigma_LN=%g price=%g", spec.flavor.value, strike, sp.rho, sig_ln, price)
    return PriceResult(price, regime, sig_ln, sig_n, decay, rv, fwd, df)


def atm_price_asymptotic(market: MarketParams, grid: AveragingGrid, flavor: Flavor | str = Flavor.CALL) -> float:
    """Leading at-the-money price e^{-rT} S0 sqrt(beta v(rho)/pi) / sqrt(n), same for call and put."""
    Flavor(flavor)
    sp = scaled_params(market, grid)
    return (
        discount_factor(market, grid)
        * market.spot
        * math.sqrt(sp.beta * fluctuation_variance(sp.rho) / math.pi)
        / math.sqrt(grid.n)
    )


def _fixed_expansion(strike, flavor, market, grid) -> float:
    # Intrinsic on A_inf plus the 1/(2n) gap between E[A_n] and A_inf.
    sp = scaled_params(market, grid)
    df = discount_factor(market, grid)
    fwd = a_infinity(market.spot, sp.rho)
    corr = market.spot * math.expm1(sp.rho) / (2.0 * grid.n)
    if flavor is Flavor.CALL:
        return df * (fwd - strike + corr)
    return df * (strike - fwd - corr)


def _floating_expansion(kappa, flavor, market, grid) -> float:
    sp = scaled_params(market, grid)
    df_r = discount_factor(market, grid)
    df_q = math.exp(-market.dividend * grid.maturity)
    fwd = a_infinity(market.spot, sp.rho)
    corr = market.spot * math.expm1(sp.rho) / (2.0 * grid.n)
    # e^{-rT} E[kappa S_T] = e^{-qT} kappa S0
    call = df_q * kappa * market.spot - df_r * (fwd + corr)
    return call if flavor is Flavor.CALL else -call


def itm_expansion(spec: OptionSpec, market: MarketParams, grid: AveragingGrid) -> float:
    """In-the-money price to O(1/n).

    Fixed call: e^{-rT}(A_inf - K) + e^{-rT} S0 (e^rho - 1)/(2n); the put flips
    both signs. For rho = 0 the correction is exponentially small and only the
    intrinsic part is returned.
    """
    sp = scaled_params(market, grid)
    if spec.style is Style.FIXED:
        regime = _regime(spec.strike, a_infinity(market.spot, sp.rho), spec.flavor)
        if regime is not Regime.ITM:
            raise RegimeError(f"option is {regime.value}, expansion needs ITM")
        if sp.rho == 0.0:
            diff = market.spot - spec.strike
            return discount_factor(market, grid) * (diff if spec.flavor is Flavor.CALL else -diff)
        return _fixed_expansion(spec.strike, spec.flavor, market, grid)
    regime = floating_regime(spec, market, grid)
    if regime is not Regime.ITM:
        raise RegimeError(f"option is {regime.value}, expansion needs ITM")
    if sp.rho == 0.0:
        diff = market.spot * (spec.kappa - 1.0)
        return discount_factor(market, grid) * (diff if spec.flavor is Flavor.CALL else -diff)
    return _floating_expansion(spec.kappa, spec.flavor, market, grid)


def otm_decay(
    spec: OptionSpec, market: MarketParams, grid: AveragingGrid, cfg: VariationalConfig = DEFAULT_CONFIG
) -> float:
    """Leading exponent n I(K) of an out-of-the-money price (floating: n H(0))."""
    if spec.style is Style.FIXED:
        regime = fixed_regime(spec, market, grid)
        if regime is not Regime.OTM:
            raise RegimeError(f"option is {regime.value}, decay needs OTM")
        return _decay(spec.strike, market, grid, cfg)
    regime = floating_regime(spec, market, grid)
    if regime is not Regime.OTM:
        raise RegimeError(f"option is {regime.value}, decay needs OTM")
    star = starred_market(market)
    return _decay(spec.kappa * market.spot, star, grid, cfg)


# ---------------------------------------------------------------------------
# Floating strike
# ---------------------------------------------------------------------------


def starred_market(market: MarketParams) -> MarketParams:
    """Auxiliary market with drift q - r: rate and dividend swapped."""
    return replace(market, rate=market.dividend, dividend=market.rate)


def floating_atm_kappa(rho: float) -> float:
    """kappa = (1 - e^{-rho})/rho at which both floating options are at the money."""
    return a_infinity(1.0, -rho)


def floating_regime(spec: OptionSpec, market: MarketParams, grid: AveragingGrid) -> Regime:
    _require_style(spec, Style.FLOATING)
    rho = scaled_params(market, grid).rho
    # The floating call is the fixed put of the auxiliary market at K = kappa S0.
    fixed_flavor = Flavor.PUT if spec.flavor is Flavor.CALL else Flavor.CALL
    return _regime(spec.kappa * market.spot, a_infinity(market.spot, -rho), fixed_flavor)


def floating_atm_price(market: MarketParams, grid: AveragingGrid) -> float:
    """e^{-rT} S0 sqrt(s^2/(2 pi)) / sqrt(n) for the at-the-money floating option."""
    sp = scaled_params(market, grid)
    s2 = floating_atm_variance(sp.beta, sp.rho)
    return discount_factor(market, grid) * market.spot * math.sqrt(s2 / (2.0 * math.pi)) / math.sqrt(grid.n)


def price_floating(
    spec: OptionSpec, market: MarketParams, grid: AveragingGrid, cfg: VariationalConfig = DEFAULT_CONFIG
) -> PriceResult:
    """Floating call (put) = fixed put (call) at strike kappa S0 in the auxiliary market."""
    _require_style(spec, Style.FLOATING)
    star = starred_market(market)
    fixed_flavor = Flavor.PUT if spec.flavor is Flavor.CALL else Flavor.CALL
    res = price_fixed(OptionSpec.fixed(spec.kappa * market.spot, fixed_flavor), star, grid, cfg)
    regime = floating_regime(spec, market, grid)
    price = res.price
    if regime is Regime.ATM:
        price = floating_atm_price(market, grid)
    return PriceResult(
        price=price,
        regime=regime,
        implied_ln_vol=res.implied_ln_vol,
        implied_n_vol=res.implied_n_vol,
        decay_rate=res.decay_rate,
        diagnostics=res.diagnostics,
        forward=res.forward,
        discount=res.discount,
    )


def price(
    spec: OptionSpec, market: MarketParams, grid: AveragingGrid, cfg: VariationalConfig = DEFAULT_CONFIG
) -> PriceResult:
    """Dispatch on the option style."""
    if spec.style is Style.FIXED:
        return price_fixed(spec, market, grid, cfg)
    return price_floating(spec, market, grid, cfg)
