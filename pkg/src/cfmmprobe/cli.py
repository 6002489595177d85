"""Command-line interface.

Subcommands: recover-reserves, recover-trade, estimate-price,
verify-geometry, simulate. Exit codes: 0 success, 1 validation or usage
error, 2 solver/convergence failure. ``--format json`` emits stable
machine-readable documents that round-trip into the report types.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .adversary import estimate_price_from_trades, recover_trade
from .attack import recover_reserves, recover_reserves_cp_closed_form
from .errors import CfmmProbeError, SolverError, ValidationError
from .families import Family, TradingFunctionSpec
from .geometry import default_scale_grid, scan_scale_sign, verify_ray_invariance
from .harness import load_config, run_experiment
from .oracle import PoolOracle
from .pool import PoolState, PriceVector, Trade

OUTPUT_DIR_ENV = "CFMMPROBE_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValidationError):
    pass


def _parse_spec(text: str) -> TradingFunctionSpec:
    """Compact spec syntax: cp | cs | cm:w1,w2,... | curve:alpha,beta."""
    head, _, params = text.partition(":")
    head = head.lower()
    if head in ("cp", "constant_product"):
        return TradingFunctionSpec.constant_product(int(params) if params else 2)
    if head in ("cs", "constant_sum"):
        return TradingFunctionSpec.constant_sum(int(params) if params else 2)
    if head in ("cm", "constant_mean"):
        if not params:
            raise ValidationError("constant_mean needs weights, e.g. cm:0.8,0.2")
        return TradingFunctionSpec.constant_mean(_parse_vector(params))
    if head in ("curve", "curve_like"):
        values = _parse_vector(params) if params else []
        if len(values) != 2:
            raise ValidationError("curve_like needs alpha,beta, e.g. curve:1.0,0.5")
        return TradingFunctionSpec.curve_like(values[0], values[1])
    raise ValidationError(f"unknown spec family: {head!r}")


def _parse_vector(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"could not parse vector {text!r}") from exc


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _emit(payload: dict, args, text_lines) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _load_snapshot(path: str, spec: TradingFunctionSpec, fee: float) -> PoolState:
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    return PoolState(spec, np.asarray(data["reserves"], dtype=float), fee)


def _cmd_recover_reserves(args) -> int:
    spec = _parse_spec(args.spec)
    price = PriceVector(_parse_vector(args.price))
    delta = np.asarray(_parse_vector(args.trade), dtype=float)
    if np.all(delta == 0):
        raise ValidationError("trade must be nonzero")
    trade = Trade(delta)
    if spec.family is Family.CONSTANT_PRODUCT and spec.n_assets == 2 and args.fee == 1.0:
        result = recover_reserves_cp_closed_form(price, trade)
    else:
        result = recover_reserves(spec, price, trade, args.fee)
    payload = {
        "reserves": [float(x) for x in result.reserves],
        "lambda": result.lam,
        "residual_price": result.residual_price,
        "residual_trade": result.residual_trade,
        "unique": result.unique,
    }
    d = args.digits
    _emit(payload, args, [
        "reserves: " + ", ".join(_fmt(x, d) for x in result.reserves),
        f"lambda: {_fmt(result.lam, d)}",
        f"residual_price: {_fmt(result.residual_price, 3)}",
        f"residual_trade: {_fmt(result.residual_trade, 3)}",
        f"unique: {result.unique}",
    ])
    return 0


def _cmd_recover_trade(args) -> int:
    spec = _parse_spec(args.spec)
    before = PoolOracle(_load_snapshot(args.before, spec, args.fee))
    after = PoolOracle(_load_snapshot(args.after, spec, args.fee))
    trade = recover_trade(before, after, spec, args.fee, cs_eps=args.cs_eps)
    payload = {"delta": [float(x) for x in trade.delta]}
    _emit(payload, args, [
        "delta: " + ", ".join(_fmt(x, args.digits) for x in trade.delta),
    ])
    return 0


def _cmd_estimate_price(args) -> int:
    spec = _parse_spec(args.spec)
    state = PoolState(spec, np.asarray(_parse_vector(args.reserves)), args.fee)
    oracle = PoolOracle(state)
    price = estimate_price_from_trades(oracle, args.probe_size)
    payload = {
        "price": [float(x) for x in price.components],
        "feasibility_queries": oracle.trade_queries,
    }
    _emit(payload, args, [
        "price: " + ", ".join(_fmt(x, args.digits) for x in price.components),
        f"feasibility queries: {oracle.trade_queries}",
    ])
    return 0


def _cmd_verify_geometry(args) -> int:
    spec = _parse_spec(args.spec)
    reserves = np.asarray(_parse_vector(args.reserves), dtype=float)
    scales = (
        np.asarray(_parse_vector(args.scales), dtype=float)
        if args.scales
        else default_scale_grid()
    )
    reports = [verify_ray_invariance(spec, reserves, scales)]
    if args.trade:
        trade = Trade(np.asarray(_parse_vector(args.trade), dtype=float))
        grid = (
            np.asarray(_parse_vector(args.grid), dtype=float)
            if args.grid
            else default_scale_grid()
        )
        reports.append(scan_scale_sign(spec, reserves, trade, grid))
    payload = {"reports": [r.to_dict() for r in reports]}
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{status} {r.property.value} on {r.spec_id}: "
            f"max violation {_fmt(r.max_violation, 6)} "
            f"(tolerance {_fmt(r.tolerance, 3)}, {r.samples} samples)"
        )
    _emit(payload, args, lines)
    return 0


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        import dataclasses

        config = dataclasses.replace(config, master_seed=args.seed)
    out_path = args.out
    if out_path is None:
        out_dir = os.environ.get(OUTPUT_DIR_ENV, ".")
        out_path = os.path.join(out_dir, "report.json")
    report = run_experiment(config, out_path=out_path, csv_path=args.csv)
    payload = report.to_dict()
    agg = report.aggregates
    _emit(payload, args, [
        f"trials: {config.trials}",
        f"median relative error: {agg['median_rel_error']}",
        f"p90 relative error: {agg['p90_rel_error']}",
        f"success rate (<=1%): {agg['success_rate']:.3f}",
        f"failures: {agg['failures']}",
        f"report written to {out_path}",
    ])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfmmprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--digits", type=int, default=12,
                       help="significant digits in text output")

    p = sub.add_parser("recover-reserves",
                       help="reconstruct reserves from a price and one feasible trade")
    p.add_argument("--spec", required=True, help="cp | cs | cm:w1,w2 | curve:a,b")
    p.add_argument("--price", required=True, help="comma-separated price vector")
    p.add_argument("--trade", required=True, help="comma-separated trade vector")
    p.add_argument("--fee", type=float, default=1.0)
    common(p)
    p.set_defaults(func=_cmd_recover_reserves)

    p = sub.add_parser("recover-trade",
                       help="reconstruct a hidden trade from two pool snapshots")
    p.add_argument("--spec", required=True)
    p.add_argument("--before", required=True, help="JSON snapshot {\"reserves\": [...]}")
    p.add_argument("--after", required=True)
    p.add_argument("--fee", type=float, default=1.0)
    p.add_argument("--cs-eps", type=float, default=1e-6)
    common(p)
    p.set_defaults(func=_cmd_recover_trade)

    p = sub.add_parser("estimate-price",
                       help="recover the marginal price from feasibility queries only")
    p.add_argument("--spec", required=True)
    p.add_argument("--reserves", required=True)
    p.add_argument("--fee", type=float, default=1.0)
    p.add_argument("--probe-size", type=float, default=1e-4)
    common(p)
    p.set_defaults(func=_cmd_estimate_price)

    p = sub.add_parser("verify-geometry",
                       help="run the ray-invariance and scale-sign checks")
    p.add_argument("--spec", required=True)
    p.add_argument("--reserves", required=True)
    p.add_argument("--scales", help="comma-separated scale factors")
    p.add_argument("--trade", help="feasible trade for the sign scan")
    p.add_argument("--grid", help="scale grid for the sign scan")
    common(p)
    p.set_defaults(func=_cmd_verify_geometry)

    p = sub.add_parser("simulate", help="run a config-driven experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help=f"report path (default: ${OUTPUT_DIR_ENV}/report.json)")
    p.add_argument("--csv", help="optional per-trial CSV path")
    p.add_argument("--seed", type=int, help="override the config master_seed")
    common(p)
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    except CfmmProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
