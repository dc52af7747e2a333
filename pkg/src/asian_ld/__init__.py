"""Large-deviation and fluctuation asymptotics for discretely sampled Asian options."""

from .errors import AsianLDError, ConvergenceError, DomainError, RegimeError
from .scaling import (
    AveragingGrid,
    MarketParams,
    ScaledParams,
    a_infinity,
    discount_factor,
    discrete_forward,
    floating_atm_variance,
    fluctuation_variance,
    scaled_params,
)
from .variational import (
    Branch,
    RateValue,
    VariationalConfig,
    floating_rate_h0,
    lambda_mgf,
    mgf_log_limit,
    rate_i,
    rate_j,
    rate_j_array,
    solve_delta_fixed,
    solve_xi_fixed,
    xi_max,
)
from .pricing import (
    Flavor,
    OptionSpec,
    PriceResult,
    Regime,
    Style,
    implied_lognormal_vol,
    implied_normal_vol,
    price,
    price_fixed,
    price_floating,
)
from .mc_oracle import McConfig, McEstimate, brute_force_lambda, brute_force_rate, mc_average_moments, mc_price

__version__ = "0.1.0"
