import math

import numpy as np
import pytest

from asian_ld import (
    AveragingGrid,
    DomainError,
    MarketParams,
    McConfig,
    OptionSpec,
    a_infinity,
    brute_force_lambda,
    brute_force_rate,
    discrete_forward,
    fluctuation_variance,
    lambda_mgf,
    mc_average_moments,
    mc_price,
    rate_j,
    scaled_params,
)
from asian_ld.mc_oracle import brute_force_lambda_ab, implied_vol_from_price
from asian_ld.pricing import atm_price_asymptotic, bs_kernel, floating_atm_price


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs", [dict(paths=0), dict(batch=1), dict(workers=0), dict(seed=-1), dict(seed=2**64)]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            McConfig(**kwargs)

    def test_zscore(self):
        from asian_ld import McEstimate

        assert McEstimate(1.0, 0.5, 10, 0.0).zscore(0.0) == 2.0
        assert McEstimate(1.0, 0.0, 10, 0.0).zscore(1.0) == 0.0
        assert McEstimate(1.0, 0.0, 10, 0.0).zscore(0.5) == math.inf


class TestDeterministicPaths:
    @pytest.mark.parametrize("flavor, strike", [("call", 1.9), ("put", 2.2), ("call", 2.5)])
    def test_zero_vol_exact(self, flavor, strike):
        m, g = MarketParams(2.0, 0.05, 0.01, 0.0), AveragingGrid.from_maturity(1.0, 50)
        est = mc_price(OptionSpec.fixed(strike, flavor), m, g, McConfig(paths=1000, seed=3))
        fwd = discrete_forward(2.0, 0.04, 50)
        diff = fwd - strike if flavor == "call" else strike - fwd
        assert est.stderr == 0.0
        assert est.mean == pytest.approx(math.exp(-0.05) * max(diff, 0.0), rel=1e-13, abs=1e-15)

    def test_zero_vol_moments(self):
        m, g = MarketParams(1.0, 0.0, 0.0, 0.0), AveragingGrid(40, 0.025)
        mom = mc_average_moments(m, g, McConfig(paths=500))
        assert mom.scaled_variance.mean == 0.0
        assert mom.mean_average.mean == pytest.approx(1.0, rel=1e-15)

    def test_zero_vol_moments_with_drift(self):
        # E[Y^2] is the squared discretisation gap when nothing is random
        m, g = MarketParams(1.0, 0.1, 0.0, 0.0), AveragingGrid(40, 0.025)
        mom = mc_average_moments(m, g, McConfig(paths=500))
        gap = discrete_forward(1.0, 0.1, 40) - a_infinity(1.0, 0.1)
        assert mom.scaled_variance.mean == pytest.approx(40 * gap * gap, rel=1e-9)


class TestReproducibility:
    def test_bit_identical(self, fmw1):
        spec = OptionSpec.fixed(2.0)
        cfg = McConfig(paths=30_000, seed=42, batch=7_000)
        a = mc_price(spec, *fmw1, cfg)
        b = mc_price(spec, *fmw1, cfg)
        assert a.mean == b.mean and a.stderr == b.stderr

    def test_workers_do_not_change_result(self, fmw1):
        spec = OptionSpec.fixed(2.0)
        serial = mc_price(spec, *fmw1, McConfig(paths=30_000, seed=42, batch=7_000, workers=1))
        threaded = mc_price(spec, *fmw1, McConfig(paths=30_000, seed=42, batch=7_000, workers=3))
        assert serial.mean == threaded.mean and serial.stderr == threaded.stderr

    def test_seed_matters(self, fmw1):
        spec = OptionSpec.fixed(2.0)
        a = mc_price(spec, *fmw1, McConfig(paths=10_000, seed=1))
        b = mc_price(spec, *fmw1, McConfig(paths=10_000, seed=2))
        assert a.mean != b.mean

    def test_odd_path_count(self, fmw1):
        # antithetic sampling rounds up to whole pairs
        on = mc_price(OptionSpec.fixed(2.0), *fmw1, McConfig(paths=1001, seed=5))
        off = mc_price(OptionSpec.fixed(2.0), *fmw1, McConfig(paths=1001, seed=5, antithetic=False))
        assert (on.paths, off.paths) == (1002, 1001)


class TestStatistics:
    def test_antithetic_reduces_stderr(self, fmw1):
        spec = OptionSpec.fixed(2.0)
        on = mc_price(spec, *fmw1, McConfig(paths=100_000, seed=9, antithetic=True))
        off = mc_price(spec, *fmw1, McConfig(paths=100_000, seed=9, antithetic=False))
        assert on.stderr < off.stderr

    def test_scenario_one_price(self, fmw1):
        est = mc_price(OptionSpec.fixed(2.0), *fmw1, McConfig(paths=200_000, seed=11))
        # brackets both published high-accuracy values
        for ref in (0.055986, 0.055998):
            assert abs(est.zscore(ref)) < 4

    @pytest.mark.parametrize("rho, q", [(0.0, 0.0), (0.3, 0.05), (-0.2, 0.1)])
    def test_martingale_and_unbiased_average(self, rho, q):
        m = MarketParams(1.0, rho + q, q, 0.3)
        g = AveragingGrid(100, 0.01)
        mom = mc_average_moments(m, g, McConfig(paths=100_000, seed=17))
        st = mom.terminal_spot
        growth = math.exp(-rho)
        assert abs(growth * st.mean - 1.0) < 4 * growth * st.stderr
        assert abs(mom.mean_average.zscore(discrete_forward(1.0, rho, 100))) < 3

    def test_fluctuation_variance(self):
        m, g = MarketParams(1.0, 0.1, 0.0, 0.2), AveragingGrid(200, 0.005)
        sp = scaled_params(m, g)
        mom = mc_average_moments(m, g, McConfig(paths=200_000, seed=23))
        target = 2 * sp.beta * fluctuation_variance(sp.rho)
        assert mom.scaled_variance.mean == pytest.approx(target, rel=0.05)

    def test_atm_price_vs_asymptotic(self, fig2):
        m, g = fig2
        est = mc_price(OptionSpec.fixed(100.0), m, g, McConfig(paths=200_000, seed=29))
        asym = atm_price_asymptotic(m, g)
        # finite-n variance of A_n is larger by (1 + 1/n)(1 + 1/(2n)), so the price sits ~0.75% above
        bias = math.sqrt((1 + 1 / 100) * (1 + 1 / 200)) - 1
        assert est.mean == pytest.approx(asym * (1 + bias), rel=3 * est.stderr / est.mean + 1e-3)

    def test_floating_atm_vs_asymptotic(self, fig2):
        m, g = fig2
        est = mc_price(OptionSpec.floating(1.0), m, g, McConfig(paths=200_000, seed=31))
        assert est.mean == pytest.approx(floating_atm_price(m, g), rel=0.02)

    def test_otm_prices_decay_in_n(self):
        # fixed (beta, rho): OTM call prices fall as n grows
        beta, rho, strike = 0.5, 0.05, 1.25
        prices = []
        for n in (10, 20, 40, 80):
            m = MarketParams(1.0, rho, 0.0, math.sqrt(2 * beta / n))
            est = mc_price(OptionSpec.fixed(strike), m, AveragingGrid(n, 1.0 / n), McConfig(paths=100_000, seed=37))
            prices.append(est.mean)
        assert all(a > b for a, b in zip(prices, prices[1:]))
        assert rate_j(strike, rho).value > 0


class TestImpliedVolInversion:
    @pytest.mark.parametrize("k", [80.0, 100.0, 125.0])
    def test_round_trip(self, k):
        px = 0.97 * bs_kernel(100.0, k, 0.2 * math.sqrt(2.0))
        assert implied_vol_from_price(px, 100.0, k, 2.0, 0.97) == pytest.approx(0.2, rel=1e-12)

    def test_below_intrinsic(self):
        with pytest.raises(DomainError):
            implied_vol_from_price(1.0, 100.0, 90.0, 1.0)


class TestLambdaOracle:
    def test_theta_zero(self):
        assert brute_force_lambda(0.0, 1.0, 0.5, 0.0) == 0.0

    def test_reference_point(self):
        assert brute_force_lambda(-1.0, 1.0, 0.5, 0.0, 2000) == pytest.approx(lambda_mgf(1.0, 1.0, 0.0).value, abs=1e-5)

    @pytest.mark.parametrize("a, b, rho", [(1.0, 1.0, 0.0), (0.5, 1.0, 0.3), (2.0, 1.5, -0.4)])
    def test_second_order_convergence(self, a, b, rho):
        exact = lambda_mgf(a, b, rho).value
        ms = np.array([250, 500, 1000, 2000])
        errs = np.array([abs(brute_force_lambda_ab(a, b, rho, int(m)) - exact) for m in ms])
        slope = -np.polyfit(np.log(ms), np.log(errs), 1)[0]
        assert 1.7 <= slope <= 2.3

    def test_richardson(self):
        exact = lambda_mgf(2.0, 1.0, 0.3).value
        plain = brute_force_lambda_ab(2.0, 1.0, 0.3, 500)
        extrap = brute_force_lambda_ab(2.0, 1.0, 0.3, 500, richardson=True)
        assert abs(extrap - exact) < 1e-3 * abs(plain - exact)

    def test_domain(self):
        with pytest.raises(DomainError):
            brute_force_lambda(0.5, 1.0, 0.5, 0.0)
        with pytest.raises(DomainError):
            brute_force_lambda_ab(1.0, 1.0, 0.0, grid_points=10)


class TestRateOracle:
    def test_zero(self):
        assert brute_force_rate(1.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("x, rho", [(0.5, 0.0), (2.0, 0.1), (0.3, -0.5), (4.0, 0.5)])
    def test_agreement(self, x, rho):
        assert brute_force_rate(x, rho, 2000) == pytest.approx(rate_j(x, rho).value, abs=1e-4)

    def test_refinement_helps(self):
        exact = rate_j(0.5, 0.2).value
        coarse = abs(brute_force_rate(0.5, 0.2, 250) - exact)
        fine = abs(brute_force_rate(0.5, 0.2, 1000) - exact)
        assert fine < coarse / 8

    def test_domain(self):
        with pytest.raises(DomainError):
            brute_force_rate(0.0, 0.0)
