"""Scenario configuration, seeded Monte-Carlo trials, reports.

A scenario pins a pool, a victim trade distribution, an attacker budget,
an optional mitigation, a trial count, and one master seed. Every trial
is a pure function of (config, trial_index): per-trial randomness comes
from numpy SeedSequences spawned with (trial_index, stream) keys, so runs
are reproducible and trials are order-independent and parallel-safe.

Report documents deliberately exclude wall-clock time so that rerunning
an experiment with the same config yields a byte-identical file; timing
lives on the in-memory report object only.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
import yaml

from .adversary import recover_reserves_from_oracle
from .errors import CfmmProbeError, ValidationError
from .families import TradingFunctionSpec, spec_from_dict, spec_to_dict
from .mitigations import BatchConfig, NoiseConfig, NoisyPoolOracle, batch_execute
from .oracle import PoolOracle
from .pool import PoolState, Trade, execute_trade, quote_input

__all__ = [
    "AliceConfig",
    "EveConfig",
    "ScenarioConfig",
    "TrialReport",
    "ExperimentReport",
    "load_config",
    "save_config",
    "run_trial",
    "run_experiment",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AliceConfig:
    """Victim trade distribution: log-uniform output fraction, uniform direction."""

    min_fraction: float = 1e-4
    max_fraction: float = 0.5

    def __post_init__(self):
        if not (0 < self.min_fraction <= self.max_fraction <= 0.5):
            raise ValidationError(
                "trade fractions must satisfy 0 < min <= max <= 0.5"
            )


@dataclass(frozen=True)
class EveConfig:
    """Attacker knobs: optional query budget, probe sizing, constant-sum eps."""

    query_budget: int | None = None
    probe_size: float | None = None
    cs_eps: float = 1e-6

    def __post_init__(self):
        if self.query_budget is not None and self.query_budget < 1:
            raise ValidationError("query_budget must be positive when set")
        if self.probe_size is not None and not self.probe_size > 0:
            raise ValidationError("probe_size must be positive when set")
        if not self.cs_eps > 0:
            raise ValidationError("cs_eps must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    spec: TradingFunctionSpec
    reserves: tuple[float, ...]
    fee: float = 1.0
    alice: AliceConfig = field(default_factory=AliceConfig)
    eve: EveConfig = field(default_factory=EveConfig)
    mitigation: NoiseConfig | BatchConfig | None = None
    trials: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        # constructing the state validates reserves/fee against the spec
        self.initial_pool()

    def initial_pool(self) -> PoolState:
        return PoolState(self.spec, np.array(self.reserves), self.fee)

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "pool": {
                **spec_to_dict(self.spec),
                "reserves": list(self.reserves),
                "fee": self.fee,
            },
            "alice": dataclasses.asdict(self.alice),
            "eve": dataclasses.asdict(self.eve),
            "mitigation": _mitigation_to_dict(self.mitigation),
            "trials": self.trials,
            "master_seed": self.master_seed,
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported config schema_version: {version!r} (expected {SCHEMA_VERSION})"
            )
        pool = dict(data["pool"])
        reserves = tuple(float(x) for x in pool.pop("reserves"))
        fee = float(pool.pop("fee", 1.0))
        return cls(
            spec=spec_from_dict(pool),
            reserves=reserves,
            fee=fee,
            alice=AliceConfig(**data.get("alice", {})),
            eve=EveConfig(**data.get("eve", {})),
            mitigation=_mitigation_from_dict(data.get("mitigation")),
            trials=int(data.get("trials", 100)),
            master_seed=int(data.get("master_seed", 0)),
        )


def _mitigation_to_dict(mitigation) -> dict | None:
    if mitigation is None:
        return None
    if isinstance(mitigation, NoiseConfig):
        return {"type": "noise", **dataclasses.asdict(mitigation)}
    if isinstance(mitigation, BatchConfig):
        return {"type": "batch", **dataclasses.asdict(mitigation)}
    raise ValidationError(f"unknown mitigation object: {mitigation!r}")


def _mitigation_from_dict(data) -> NoiseConfig | BatchConfig | None:
    if data is None or data == "none":
        return None
    kind = data.get("type")
    args = {k: v for k, v in data.items() if k != "type"}
    if kind == "noise":
        return NoiseConfig(**args)
    if kind == "batch":
        return BatchConfig(**args)
    raise ValidationError(f"unknown mitigation type: {kind!r}")


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a mapping")
    return ScenarioConfig.from_dict(data)


def save_config(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_dict(), handle, sort_keys=True)


# -- trial execution ---------------------------------------------------------


@dataclass(frozen=True)
class TrialReport:
    trial_index: int
    true_delta: tuple[float, ...]
    recovered_delta: tuple[float, ...] | None
    rel_error: float | None
    queries: int
    residual_price: float | None
    residual_trade: float | None
    solver_error: str | None = None

    @property
    def succeeded(self) -> bool:
        return self.rel_error is not None

    def effective_error(self) -> float:
        return self.rel_error if self.rel_error is not None else math.inf

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "true_delta": list(self.true_delta),
            "recovered_delta": (
                list(self.recovered_delta) if self.recovered_delta is not None else None
            ),
            "rel_error": self.rel_error,
            "queries": self.queries,
            "residual_price": self.residual_price,
            "residual_trade": self.residual_trade,
            "solver_error": self.solver_error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrialReport":
        return cls(
            trial_index=data["trial_index"],
            true_delta=tuple(data["true_delta"]),
            recovered_delta=(
                tuple(data["recovered_delta"])
                if data.get("recovered_delta") is not None
                else None
            ),
            rel_error=data.get("rel_error"),
            queries=data["queries"],
            residual_price=data.get("residual_price"),
            residual_trade=data.get("residual_trade"),
            solver_error=data.get("solver_error"),
        )


def _trial_rng(master_seed: int, trial_index: int, stream: int) -> np.random.Generator:
    """Independent generator for one (trial, stream); order-insensitive."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index, stream))
    return np.random.default_rng(seq)


def _sample_trade(state: PoolState, rng: np.random.Generator,
                  min_fraction: float, max_fraction: float) -> Trade:
    """Uniform direction, log-uniform output fraction, input solved to match."""
    n = state.n_assets
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    asset_in, asset_out = pairs[int(rng.integers(len(pairs)))]
    fraction = float(np.exp(rng.uniform(np.log(min_fraction), np.log(max_fraction))))
    amount_out = fraction * float(state.reserves[asset_out])
    return quote_input(state, asset_out, amount_out, asset_in)


def _make_oracle(config: ScenarioConfig, state: PoolState, block: int):
    budget = config.eve.query_budget
    if isinstance(config.mitigation, NoiseConfig):
        noise = config.mitigation
        if noise.master_seed is None:
            noise = dataclasses.replace(noise, master_seed=config.master_seed)
        return NoisyPoolOracle(state, noise, block=block, max_queries=budget)
    return PoolOracle(state, block=block, max_queries=budget)


def run_trial(config: ScenarioConfig, trial_index: int) -> TrialReport:
    """One seeded attack trial; solver failures land in the row, not raised."""
    pool = config.initial_pool()
    alice_rng = _trial_rng(config.master_seed, trial_index, 0)
    alice_trade = _sample_trade(
        pool, alice_rng, config.alice.min_fraction, config.alice.max_fraction
    )

    if isinstance(config.mitigation, BatchConfig):
        decoy_rng = _trial_rng(config.master_seed, trial_index, 1)
        batch = [alice_trade]
        virtual = execute_trade(pool, alice_trade)
        for _ in range(config.mitigation.decoy_count):
            decoy = _sample_trade(
                virtual, decoy_rng,
                config.mitigation.decoy_min_fraction,
                config.mitigation.decoy_max_fraction,
            )
            virtual = execute_trade(virtual, decoy)
            batch.append(decoy)
        state_after, _net = batch_execute(pool, batch)
    else:
        state_after = execute_trade(pool, alice_trade)

    oracle_before = _make_oracle(config, pool, block=2 * trial_index)
    oracle_after = _make_oracle(config, state_after, block=2 * trial_index + 1)

    start = config.eve.probe_size if config.eve.probe_size is not None else 1.0
    try:
        before = recover_reserves_from_oracle(
            oracle_before, start=start, cs_eps=config.eve.cs_eps
        )
        after = recover_reserves_from_oracle(
            oracle_after, start=start, cs_eps=config.eve.cs_eps
        )
    except CfmmProbeError as exc:
        return TrialReport(
            trial_index=trial_index,
            true_delta=tuple(alice_trade.delta),
            recovered_delta=None,
            rel_error=None,
            queries=oracle_before.query_count + oracle_after.query_count,
            residual_price=None,
            residual_trade=None,
            solver_error=f"{type(exc).__name__}: {exc}",
        )

    recovered = after.reserves - before.reserves
    scale = float(np.linalg.norm(alice_trade.delta))
    rel_error = float(np.linalg.norm(recovered - alice_trade.delta)) / scale
    return TrialReport(
        trial_index=trial_index,
        true_delta=tuple(alice_trade.delta),
        recovered_delta=tuple(recovered),
        rel_error=rel_error,
        queries=oracle_before.query_count + oracle_after.query_count,
        residual_price=max(before.residual_price, after.residual_price),
        residual_trade=max(before.residual_trade, after.residual_trade),
    )


# -- experiments -------------------------------------------------------------


@dataclass
class ExperimentReport:
    config: dict
    trials: list[TrialReport]
    aggregates: dict
    wall_time: float | None = None  # never serialized: reports must be reproducible

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "aggregates": self.aggregates,
            "trials": [row.to_dict() for row in self.trials],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls(
            config=data["config"],
            trials=[TrialReport.from_dict(row) for row in data["trials"]],
            aggregates=data["aggregates"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """Flat per-trial table: one row per trial, LF line endings."""
        n = len(self.trials[0].true_delta) if self.trials else 0
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        header = (
            ["trial_index"]
            + [f"true_delta_{i}" for i in range(n)]
            + [f"recovered_delta_{i}" for i in range(n)]
            + ["rel_error", "queries", "residual_price", "residual_trade", "solver_error"]
        )
        writer.writerow(header)
        for row in self.trials:
            recovered = row.recovered_delta or [""] * n
            writer.writerow(
                [row.trial_index]
                + [repr(x) for x in row.true_delta]
                + [repr(x) if x != "" else "" for x in recovered]
                + [
                    repr(row.rel_error) if row.rel_error is not None else "",
                    row.queries,
                    repr(row.residual_price) if row.residual_price is not None else "",
                    repr(row.residual_trade) if row.residual_trade is not None else "",
                    row.solver_error or "",
                ]
            )
        return buffer.getvalue()


def _aggregate(rows: list[TrialReport]) -> dict:
    errors = np.array([row.effective_error() for row in rows])
    median = float(np.median(errors))
    p90 = float(np.percentile(errors, 90))
    return {
        "median_rel_error": median if math.isfinite(median) else None,
        "p90_rel_error": p90 if math.isfinite(p90) else None,
        "success_rate": float(np.mean(errors <= 0.01)),
        "failures": int(sum(1 for row in rows if not row.succeeded)),
        "mean_queries": float(np.mean([row.queries for row in rows])),
        "max_rel_error": (
            float(np.max(errors)) if math.isfinite(float(np.max(errors))) else None
        ),
    }


def run_experiment(config: ScenarioConfig, out_path=None, csv_path=None) -> ExperimentReport:
    """Run all trials, aggregate, optionally persist (JSON + CSV)."""
    started = time.perf_counter()
    rows = [run_trial(config, index) for index in range(config.trials)]
    report = ExperimentReport(
        config=config.to_dict(),
        trials=rows,
        aggregates=_aggregate(rows),
        wall_time=time.perf_counter() - started,
    )
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(report.to_json())
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(report.to_csv())
    return report
