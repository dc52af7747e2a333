"""Command-line interface: ``asian-ld {price,table,rate,mgf,mc}``.

Records go to stdout as CSV (header first) or JSON; diagnostics go to stderr.
Exit codes: 0 success, 2 usage or domain error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, RegimeError
from .mc_oracle import McConfig, mc_price
from .pricing import (
    OptionSpec,
    Regime,
    Style,
    atm_price_asymptotic,
    itm_expansion,
    price,
)
from .scaling import AveragingGrid, MarketParams, scaled_params
from .tables import DEFAULT_N, TABLES
from .variational import Branch, lambda_mgf, rate_j

logger = logging.getLogger("asian_ld")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONVERGENCE = 3

_DEFAULTS: Dict[str, Any] = {
    "s0": 100.0,
    "r": 0.0,
    "q": 0.0,
    "sigma": None,
    "maturity": None,
    "strike": None,
    "kappa": None,
    "n": None,
    "tau": None,
    "type": "call",
    "style": "fixed",
    "paths": 100_000,
    "seed": 0,
    "workers": 1,
    "sweep": None,
    "format": "csv",
    "x_ratio": None,
    "theta": None,
    "beta": None,
    "rho": None,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def fmt(value: Any) -> str:
    """Locale-independent shortest round-trip text for numbers; 'inf' for infinity."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def emit(records: List[Dict[str, Any]], fmt_name: str, out=None) -> None:
    out = out or sys.stdout
    if fmt_name == "json":
        clean = [{k: _json_value(v) for k, v in rec.items()} for rec in records]
        payload = clean[0] if len(clean) == 1 else clean
        out.write(json.dumps(payload, indent=2) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(records[0].keys()) if records else []
    for rec in records[1:]:
        header.extend(k for k in rec if k not in header)
    writer.writerow(header)
    for rec in records:
        writer.writerow([fmt(rec.get(k)) for k in header])
    out.write(buf.getvalue())


def _json_value(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return fmt(value)
    if hasattr(value, "value") and not isinstance(value, (int, float)):
        return value.value
    return value


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _market_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s0", type=float, help="spot price")
    p.add_argument("--r", type=float, help="risk-free rate")
    p.add_argument("--q", type=float, help="dividend yield")
    p.add_argument("--sigma", type=float, help="volatility")
    p.add_argument("--maturity", type=float, help="maturity T in years")
    p.add_argument("--n", type=int, help=f"number of fixings (default {DEFAULT_N})")
    p.add_argument("--tau", type=float, help="fixing interval; overrides maturity/n")


def _option_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strike", type=float, help="fixed strike K")
    p.add_argument("--kappa", type=float, help="floating strike weight")
    p.add_argument("--type", choices=("call", "put"))
    p.add_argument("--style", choices=("fixed", "floating"))


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="JSON file with flag values; flags override it")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asian-ld", description="Large-deviation asymptotics for discretely sampled Asian options."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price one option")
    _market_flags(p)
    _option_flags(p)
    _common_flags(p)

    p = sub.add_parser("table", help="regenerate a benchmark table as CSV")
    p.add_argument("name", help="one of: " + ", ".join(TABLES))
    _common_flags(p)

    p = sub.add_parser("rate", help="rate function J(x, rho)")
    p.add_argument("--x-ratio", dest="x_ratio", type=float, help="x / S0")
    p.add_argument("--rho", type=float)
    p.add_argument("--sweep", help="lo:hi:steps grid of x_ratio values")
    _market_flags(p)
    _common_flags(p)

    p = sub.add_parser("mgf", help="limiting log-MGF of the average")
    p.add_argument("--theta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--sweep", help="lo:hi:steps grid of theta values")
    _market_flags(p)
    _common_flags(p)

    p = sub.add_parser("mc", help="Monte Carlo price against the asymptotic one")
    _market_flags(p)
    _option_flags(p)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    _common_flags(p)
    return parser


def resolve(args: argparse.Namespace) -> Dict[str, Any]:
    """Merge defaults < config file < explicit flags."""
    values = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in cfg.items():
            key = key.replace("-", "_")
            if key not in values:
                raise UsageError(f"unknown config key: {key}")
            values[key] = val
    for key, val in vars(args).items():
        if val is not None and key in values:
            values[key] = val
    return values


def _need(values: Dict[str, Any], *keys: str) -> None:
    missing = [k for k in keys if values.get(k) is None]
    if missing:
        raise UsageError("missing required flag(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _market(values) -> MarketParams:
    _need(values, "s0", "sigma")
    return MarketParams(float(values["s0"]), float(values["r"]), float(values["q"]), float(values["sigma"]))


def _grid(values) -> AveragingGrid:
    n, tau, mat = values["n"], values["tau"], values["maturity"]
    if tau is not None:
        if n is None:
            _need(values, "maturity")
            n = max(1, round(float(mat) / float(tau)))
        return AveragingGrid(int(n), float(tau))
    _need(values, "maturity")
    return AveragingGrid.from_maturity(float(mat), int(n) if n is not None else DEFAULT_N)


def _spec(values) -> OptionSpec:
    if values["style"] == "floating":
        _need(values, "kappa")
        return OptionSpec.floating(float(values["kappa"]), values["type"])
    _need(values, "strike")
    return OptionSpec.fixed(float(values["strike"]), values["type"])


def _sweep(text: str) -> List[float]:
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise UsageError(f"--sweep expects lo:hi:steps, got {text!r}") from exc
    if steps < 1:
        raise UsageError("--sweep steps must be >= 1")
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * i / (steps - 1) for i in range(steps)]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _base_record(values, market, grid, spec) -> Dict[str, Any]:
    sp = scaled_params(market, grid)
    rec: Dict[str, Any] = {
        "style": spec.style.value,
        "type": spec.flavor.value,
        "s0": market.spot,
        "r": market.rate,
        "q": market.dividend,
        "sigma": market.sigma,
        "maturity": grid.maturity,
        "n": grid.n,
        "tau": grid.tau,
    }
    if spec.style is Style.FIXED:
        rec["strike"] = spec.strike
    else:
        rec["kappa"] = spec.kappa
    rec["beta"] = sp.beta
    rec["rho"] = sp.rho
    return rec


def cmd_price(values) -> List[Dict[str, Any]]:
    market, grid, spec = _market(values), _grid(values), _spec(values)
    res = price(spec, market, grid)
    rec = _base_record(values, market, grid, spec)
    rec.update(
        regime=res.regime,
        sigma_ln=res.implied_ln_vol,
        sigma_n=res.implied_n_vol,
        price=res.price,
        decay_rate=res.decay_rate,
    )
    return [rec]


def cmd_table(name: str) -> List[Dict[str, Any]]:
    if name not in TABLES:
        raise UsageError(f"unknown table {name!r}; choose from {', '.join(TABLES)}")
    records = []
    for sc in TABLES[name]():
        res = sc.price()
        rec: Dict[str, Any] = {
            "scenario": sc.name,
            "r": sc.market.rate,
            "T": sc.maturity,
            "s0": sc.market.spot,
            "strike": sc.strike,
            "sigma": sc.market.sigma,
            "computed": res.price,
            "sigma_ln": res.implied_ln_vol,
        }
        for col, val in sc.references.items():
            rec["ref_" + col] = val
        records.append(rec)
    return records


def _rate_rho(values) -> float:
    if values["rho"] is not None:
        return float(values["rho"])
    if values["maturity"] is not None:
        return (float(values["r"]) - float(values["q"])) * float(values["maturity"])
    raise UsageError("missing required flag: --rho (or --r/--q/--maturity)")


def _rate_record(x: float, rho: float) -> Dict[str, Any]:
    if x <= 0.0:
        return {"x_ratio": x, "rho": rho, "J": math.inf, "branch": Branch.INFINITE, "root": None, "residual": None}
    rv = rate_j(x, rho)
    return {"x_ratio": x, "rho": rho, "J": rv.value, "branch": rv.branch, "root": rv.root, "residual": rv.residual}


def cmd_rate(values) -> List[Dict[str, Any]]:
    rho = _rate_rho(values)
    if values["sweep"]:
        return [_rate_record(x, rho) for x in _sweep(values["sweep"])]
    _need(values, "x_ratio")
    return [_rate_record(float(values["x_ratio"]), rho)]


def _mgf_record(theta: float, s0: float, beta: float, rho: float) -> Dict[str, Any]:
    rec: Dict[str, Any] = {"theta": theta, "s0": s0, "beta": beta, "rho": rho}
    if theta > 0.0:
        rec.update(**{"lambda": math.inf, "branch": Branch.INFINITE, "root": None})
    elif theta == 0.0:
        rec.update(**{"lambda": 0.0, "branch": Branch.SERIES_BOUNDARY, "root": 0.0})
    else:
        rv = lambda_mgf(-theta * s0, math.sqrt(2.0 * beta), rho)
        rec.update(**{"lambda": rv.value, "branch": rv.branch, "root": rv.root})
    return rec


def cmd_mgf(values) -> List[Dict[str, Any]]:
    s0 = float(values["s0"])
    if values["beta"] is not None and values["rho"] is not None:
        beta, rho = float(values["beta"]), float(values["rho"])
    else:
        sp = scaled_params(_market(values), _grid(values))
        beta = float(values["beta"]) if values["beta"] is not None else sp.beta
        rho = float(values["rho"]) if values["rho"] is not None else sp.rho
    if not beta > 0.0:
        raise DomainError(f"beta must be > 0, got {beta}")
    if values["sweep"]:
        return [_mgf_record(t, s0, beta, rho) for t in _sweep(values["sweep"])]
    _need(values, "theta")
    return [_mgf_record(float(values["theta"]), s0, beta, rho)]


def cmd_mc(values) -> List[Dict[str, Any]]:
    market, grid, spec = _market(values), _grid(values), _spec(values)
    cfg = McConfig(paths=int(values["paths"]), seed=int(values["seed"]), workers=int(values["workers"]))
    est = mc_price(spec, market, grid, cfg)
    res = price(spec, market, grid)
    rec = _base_record(values, market, grid, spec)
    rec.update(
        paths=est.paths,
        seed=cfg.seed,
        mc_mean=est.mean,
        mc_stderr=est.stderr,
        asymptotic=res.price,
        regime=res.regime,
        zscore=est.zscore(res.price),
    )
    if spec.style is Style.FIXED and res.regime is Regime.ATM:
        rec["atm_leading"] = atm_price_asymptotic(market, grid, spec.flavor)
    elif res.regime is Regime.ITM:
        rec["itm_expansion"] = itm_expansion(spec, market, grid)
    return [rec]


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    try:
        values = resolve(args)
        if args.command == "price":
            records = cmd_price(values)
        elif args.command == "table":
            records = cmd_table(args.name)
        elif args.command == "rate":
            records = cmd_rate(values)
        elif args.command == "mgf":
            records = cmd_mgf(values)
        else:
            records = cmd_mc(values)
        emit(records, values["format"])
    except (UsageError, DomainError, RegimeError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
