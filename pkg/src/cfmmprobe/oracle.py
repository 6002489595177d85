"""Query interface an attacker gets: price, trade validity, execution.

The oracle hides the reserves. Its public surface is exactly what anyone
needs to interact with the pool at all: the trading-function spec and fee
(public contract parameters), the current marginal price, and whether a
given trade would be accepted. Query counts are tracked so experiments
can report and bound attacker effort.
"""

from __future__ import annotations

import abc

from .errors import ValidationError
from .families import TradingFunctionSpec
from .pool import PoolState, PriceVector, Trade, execute_trade, is_feasible, marginal_price

__all__ = ["CfmmOracle", "PoolOracle"]


class CfmmOracle(abc.ABC):
    """Abstract pool oracle: price and validity queries over hidden reserves."""

    @property
    @abc.abstractmethod
    def spec(self) -> TradingFunctionSpec:
        """The (public) trading-function spec."""

    @property
    @abc.abstractmethod
    def fee(self) -> float:
        """The (public) fee parameter."""

    @abc.abstractmethod
    def marginal_price(self) -> PriceVector:
        """Reported marginal price at the hidden reserves."""

    @abc.abstractmethod
    def check_trade(self, trade: Trade) -> bool:
        """Would the pool accept this trade right now?"""

    @abc.abstractmethod
    def execute(self, trade: Trade) -> bool:
        """Submit the trade; True if accepted (state advances), else False."""


class PoolOracle(CfmmOracle):
    """Honest oracle over a hidden PoolState.

    ``block`` is a block-height counter; it advances on every accepted
    trade. Subclasses use it to pin per-block randomness.
    """

    def __init__(self, state: PoolState, block: int = 0, max_queries: int | None = None):
        self._state = state
        self._block = int(block)
        self._max_queries = max_queries
        self.price_queries = 0
        self.trade_queries = 0
        self.executions = 0

    # -- public knowledge --------------------------------------------------

    @property
    def spec(self) -> TradingFunctionSpec:
        return self._state.spec

    @property
    def fee(self) -> float:
        return self._state.fee

    @property
    def block(self) -> int:
        return self._block

    @property
    def query_count(self) -> int:
        return self.price_queries + self.trade_queries + self.executions

    def _spend(self):
        if self._max_queries is not None and self.query_count >= self._max_queries:
            raise ValidationError(
                f"oracle query budget of {self._max_queries} exhausted"
            )

    # -- queries -----------------------------------------------------------

    def marginal_price(self) -> PriceVector:
        self._spend()
        self.price_queries += 1
        return marginal_price(self._state)

    def check_trade(self, trade: Trade) -> bool:
        self._spend()
        self.trade_queries += 1
        return is_feasible(self._state, trade)

    def execute(self, trade: Trade) -> bool:
        self._spend()
        self.executions += 1
        if not is_feasible(self._state, trade):
            return False
        self._state = execute_trade(self._state, trade)
        self._block += 1
        return True

    # -- experiment plumbing (not part of the attacker's view) --------------

    def peek_state(self) -> PoolState:
        """Ground-truth state, for harnesses and tests only."""
        return self._state
