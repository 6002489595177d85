"""Privacy mitigations: per-block randomized prices and order batching.

Both are wrappers around an honest pool. The noisy oracle multiplies each
non-numeraire price component by exp(sigma * z) with z drawn
deterministically from (master seed, block index, component), so repeated
queries inside one block see one fixed price and averaging across queries
buys an attacker nothing. Batching executes a set of trades as their net:
only the net is ever observable on chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .oracle import PoolOracle
from .pool import PoolState, PriceVector, Trade, execute_trade, marginal_price

__all__ = [
    "NoiseConfig",
    "BatchConfig",
    "noisy_price_oracle",
    "NoisyPoolOracle",
    "batch_execute",
    "evaluate_mitigation",
    "PrivacyReport",
]


@dataclass(frozen=True)
class NoiseConfig:
    """Log-normal multiplicative price noise, fixed per block.

    sigma = 0 reproduces the honest oracle exactly. ``master_seed`` keys
    the per-block draws; harnesses inject their experiment seed here when
    it is left as None.
    """

    sigma: float
    master_seed: int | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValidationError("noise sigma must be >= 0")

    def factors(self, block: int, n_assets: int) -> np.ndarray:
        """Per-component multipliers for one block; numeraire is untouched."""
        out = np.ones(n_assets)
        if self.sigma == 0.0:
            return out
        seed = self.master_seed if self.master_seed is not None else 0
        for i in range(n_assets - 1):
            seq = np.random.SeedSequence(entropy=seed, spawn_key=(block, i))
            z = np.random.default_rng(seq).standard_normal()
            out[i] = np.exp(self.sigma * z)
        return out


@dataclass(frozen=True)
class BatchConfig:
    """Decoy-order batching: Alice's trade rides with random cover trades.

    decoy_count = 0 reproduces plain single-trade execution. Decoy sizes
    are log-uniform fractions of the output-side reserve, directions
    uniform over ordered asset pairs.
    """

    decoy_count: int
    decoy_min_fraction: float = 1e-3
    decoy_max_fraction: float = 0.1

    def __post_init__(self):
        if self.decoy_count < 0:
            raise ValidationError("decoy_count must be >= 0")
        if not (0 < self.decoy_min_fraction <= self.decoy_max_fraction <= 0.5):
            raise ValidationError(
                "decoy fractions must satisfy 0 < min <= max <= 0.5"
            )


def noisy_price_oracle(state: PoolState, cfg: NoiseConfig, block: int) -> PriceVector:
    """Marginal price with the block's noise applied (sigma=0: honest price)."""
    honest = marginal_price(state)
    return PriceVector(honest.components * cfg.factors(block, state.n_assets))


class NoisyPoolOracle(PoolOracle):
    """PoolOracle whose reported price carries per-block log-normal noise.

    Trade feasibility is checked against the true reserves; only the
    reported price is randomized, so the noise shows up as inconsistency
    between the price and the feasible set, which is what degrades the
    attack.
    """

    def __init__(self, state: PoolState, noise: NoiseConfig, block: int = 0,
                 max_queries: int | None = None):
        super().__init__(state, block=block, max_queries=max_queries)
        self._noise = noise

    def marginal_price(self) -> PriceVector:
        self._spend()
        self.price_queries += 1
        return noisy_price_oracle(self._state, self._noise, self._block)


def batch_execute(state: PoolState, trades: Sequence[Trade]) -> tuple[PoolState, Trade]:
    """Execute a batch atomically as its net trade.

    The whole batch is rejected if the net trade fails the feasibility
    check; intermediate states never exist.
    """
    if len(trades) == 0:
        net = Trade.zero(state.n_assets)
        return state, net
    net = Trade(np.sum([t.delta for t in trades], axis=0))
    return execute_trade(state, net), net


@dataclass(frozen=True)
class PrivacyReport:
    """Attack-quality summary for one mitigation scenario.

    ``arbitrage_loss`` is reserved for pricing the cost of noisy quotes
    to liquidity providers; not computed in this version.
    """

    scenario: dict
    trials: int
    failures: int
    median_rel_error: float | None
    p90_rel_error: float | None
    success_rate: float
    arbitrage_loss: float | None = None
    per_trial: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "trials": self.trials,
            "failures": self.failures,
            "median_rel_error": self.median_rel_error,
            "p90_rel_error": self.p90_rel_error,
            "success_rate": self.success_rate,
            "arbitrage_loss": self.arbitrage_loss,
            "per_trial": list(self.per_trial),
        }


def evaluate_mitigation(scenario) -> PrivacyReport:
    """Run the configured attack against a mitigated pool and score it.

    Thin wrapper over the experiment harness; see
    :func:`cfmmprobe.harness.run_experiment` for the mechanics.
    """
    from .harness import run_experiment  # local import: harness builds on this module

    report = run_experiment(scenario)
    agg = report.aggregates
    return PrivacyReport(
        scenario=scenario.to_dict(),
        trials=report.config["trials"],
        failures=agg["failures"],
        median_rel_error=agg["median_rel_error"],
        p90_rel_error=agg["p90_rel_error"],
        success_rate=agg["success_rate"],
        per_trial=[row.to_dict() for row in report.trials],
    )
