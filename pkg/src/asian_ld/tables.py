"""Benchmark scenarios and published reference prices.

Reference values are display-only: they are tagged with the method that
produced them and never feed a computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .pricing import Flavor, OptionSpec, PriceResult, Style, price
from .scaling import AveragingGrid, MarketParams

DEFAULT_N = 250


@dataclass(frozen=True)
class Scenario:
    name: str
    market: MarketParams
    maturity: float
    strike: Optional[float] = None
    kappa: Optional[float] = None
    flavor: Flavor = Flavor.CALL
    style: Style = Style.FIXED
    n: Optional[int] = None
    tau: Optional[float] = None
    references: Dict[str, float] = field(default_factory=dict)

    @property
    def spec(self) -> OptionSpec:
        if self.style is Style.FIXED:
            return OptionSpec.fixed(self.strike, self.flavor)
        return OptionSpec.floating(self.kappa, self.flavor)

    @property
    def grid(self) -> AveragingGrid:
        if self.tau is not None:
            n = self.n if self.n is not None else max(1, round(self.maturity / self.tau))
            return AveragingGrid(n, self.tau)
        return AveragingGrid.from_maturity(self.maturity, self.n or DEFAULT_N)

    def price(self) -> PriceResult:
        return price(self.spec, self.market, self.grid)


# Asymptotic prices as published, one list per table.
FMW7_PZ = (0.055998, 0.218480, 0.172460, 0.193692, 0.246944, 0.306744, 0.351517)
SMALLVOL_PZ = (1.60739, 0.621359, 0.0137615, 5.2719, 2.41821, 0.0724339, 26.1756, 10.5996, 5.8331e-6)
DISCRETE_PZ = (8.3789, 11.1362, 14.2818)

_FMW7_ROWS = (
    # r, T, S0, K, sigma, {column: value}
    (0.02, 1.0, 2.0, 2.0, 0.10, (0.055986, 0.055986, 0.056036, 0.055986, 0.056054, 0.055986)),
    (0.18, 1.0, 2.0, 2.0, 0.30, (0.218387, 0.218369, 0.218360, 0.218388, 0.219829, 0.218387)),
    (0.0125, 2.0, 2.0, 2.0, 0.25, (0.172267, 0.172263, 0.172369, 0.172269, 0.173490, 0.172269)),
    (0.05, 1.0, 1.9, 2.0, 0.50, (0.193164, 0.193188, 0.192972, 0.193174, 0.195379, 0.193174)),
    (0.05, 1.0, 2.0, 2.0, 0.50, (0.246406, 0.246382, 0.246519, 0.246416, 0.249791, 0.246416)),
    (0.05, 1.0, 2.1, 2.0, 0.50, (0.306210, 0.306139, 0.306497, 0.306220, 0.310646, 0.306220)),
    (0.05, 2.0, 2.0, 2.0, 0.50, (0.350040, 0.349909, 0.348926, 0.350095, 0.359204, 0.350095)),
)
_FMW7_COLUMNS = ("FPP3", "MAE3", "Mellin500", "Vecer", "LN", "Linetsky")

_SMALLVOL_ROWS = (
    # T, K, FPP3, MAE3, Mellin500
    (0.25, 99.0, 1.60739, 1.60739, 1.51718),
    (0.25, 100.0, 0.621359, 0.621359, 0.696855),
    (0.25, 101.0, 0.0137618, 0.0137615, 0.0160361),
    (1.00, 97.0, 5.27190, 5.27190, 5.27474),
    (1.00, 100.0, 2.41821, 2.41821, 2.43303),
    (1.00, 103.0, 0.0726910, 0.0724337, 0.0850816),
    (5.00, 80.0, 26.1756, 26.1756, 26.1756),
    (5.00, 100.0, 10.5996, 10.5996, 10.5993),
    (5.00, 120.0, 2.06699e-5, 5.73317e-6, 1.42235e-3),
)

# Discretely sampled references, keyed by "<method> n=<count>" per spot.
_DISCRETE_SPOTS = (95.0, 100.0, 105.0)
_DISCRETE_REFS = {
    "Vecer n=250": (8.4001, 11.1600, 14.3073),
    "Vecer n=500": (8.3826, 11.1416, 14.2881),
    "Vecer n=1000": (8.3741, 11.1322, 14.2786),
    "Vecer n=inf": (8.3661, 11.1233, 14.2696),
    "Tavella-Randall n=250": (8.3972, 11.1573, 14.3054),
    "Tavella-Randall n=500": (8.3804, 11.1392, 14.2866),
    "Tavella-Randall n=1000": (8.3719, 11.1300, 14.2771),
    "Tavella-Randall n=inf": (8.3640, 11.1215, 14.2681),
    "Curran n=250": (8.3972, 11.1572, 14.3048),
    "Curran n=500": (8.3801, 11.1388, 14.2857),
    "Curran n=1000": (8.3715, 11.1296, 14.2762),
}


def fmw7() -> List[Scenario]:
    rows = []
    for i, (r, t, s0, k, vol, refs) in enumerate(_FMW7_ROWS):
        tagged = dict(zip(_FMW7_COLUMNS, refs))
        tagged["PZ"] = FMW7_PZ[i]
        rows.append(Scenario(f"fmw{i + 1}", MarketParams(s0, r, 0.0, vol), t, strike=k, references=tagged))
    return rows


def smallvol() -> List[Scenario]:
    market = MarketParams(100.0, 0.05, 0.0, 0.01)
    rows = []
    for i, (t, k, fpp3, mae3, mellin) in enumerate(_SMALLVOL_ROWS):
        refs = {"PZ": SMALLVOL_PZ[i], "FPP3": fpp3, "MAE3": mae3, "Mellin500": mellin}
        rows.append(Scenario(f"smallvol_T{t:g}_K{k:g}", market, t, strike=k, references=refs))
    return rows


def discrete() -> List[Scenario]:
    rows = []
    for i, s0 in enumerate(_DISCRETE_SPOTS):
        refs = {col: vals[i] for col, vals in _DISCRETE_REFS.items()}
        refs["PZ"] = DISCRETE_PZ[i]
        rows.append(Scenario(f"discrete_S{s0:g}", MarketParams(s0, 0.1, 0.0, 0.4), 1.0, strike=100.0, references=refs))
    return rows


TABLES = {"fmw7": fmw7, "smallvol": smallvol, "discrete": discrete}
