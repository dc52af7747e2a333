"""Shared fixtures and an independent high-precision rate-function oracle."""

import sys

import mpmath as mp
import pytest

from asian_ld import AveragingGrid, MarketParams


def _bisect(f, lo, hi, steps=200):
    flo = f(lo)
    for _ in range(steps):
        mid = (lo + hi) / 2
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def rate_j_mp(x_ratio, rho, dps=40):
    """Rate function J evaluated in mpmath straight from the branch formulas."""
    with mp.workdps(dps):
        x, r = mp.mpf(x_ratio), mp.mpf(rho)
        tiny = mp.mpf("1e-30")
        if x >= 1 + r / 2:

            def t1(d):
                return mp.sinh(d) / d + 2 * r / d**2 * mp.sinh(d / 2) ** 2

            hi = mp.mpf(1)
            while t1(hi) < x:
                hi *= 2
            d = _bisect(lambda v: t1(v) - x, tiny, hi)
            th = mp.tanh(d / 2)
            val = (
                (d**2 - r**2) / 2 * (1 - 2 * th / (d + r * th))
                - 2 * r * mp.log(mp.cosh(d / 2) + r / d * mp.sinh(d / 2))
                + r**2
            )
            return float(val)

        def h(z):
            return 2 * z * mp.cos(z) + r * mp.sin(z)

        if r == 0:
            top = mp.pi / 2
        elif r > 0:
            top = _bisect(h, mp.pi / 2, mp.pi)
        else:
            top = _bisect(h, mp.mpf("1e-20"), mp.pi / 2)

        def t2(z):
            return mp.sin(2 * z) / (2 * z) + r / (2 * z**2) * mp.sin(z) ** 2

        z = _bisect(lambda v: t2(v) - x, tiny, top)
        tz = mp.tan(z)
        val = (
            2 * (z**2 + r**2 / 4) * (tz / (z + r / 2 * tz) - 1)
            - 2 * r * mp.log(mp.cos(z) + r / (2 * z) * mp.sin(z))
            + r**2
        )
        return float(val)


@pytest.fixture
def fmw1():
    return MarketParams(spot=2.0, rate=0.02, dividend=0.0, sigma=0.1), AveragingGrid.from_maturity(1.0, 250)


@pytest.fixture
def fig2():
    # sigma = 0.2, r = q = 0, tau = 0.01, n = 100
    return MarketParams(spot=100.0, rate=0.0, dividend=0.0, sigma=0.2), AveragingGrid(100, 0.01)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
