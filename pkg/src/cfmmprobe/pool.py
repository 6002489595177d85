"""Pool state, trades, marginal prices, and trade execution.

Sign convention for trades: a positive component is tendered to the pool,
a negative component is withdrawn from it. With fee parameter ``gamma`` in
(0, 1], a trade ``delta`` is accepted when

    R + delta >= 0 componentwise, and
    |psi(R + gamma*delta_plus - delta_minus) - psi(R)| <= tol_feas(R),

i.e. only the tendered side is discounted. On execution the reserves
absorb the full tendered amount (R <- R + delta), so with gamma < 1 the
trading-function value drifts upward: the fee accrues to the pool.

Everything here is immutable; execution returns a new PoolState.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    NoSolutionError,
    TradeRejectedError,
    ValidationError,
)
from .families import TradingFunctionSpec, eval_psi, grad_psi, psi_diff

__all__ = [
    "Trade",
    "PriceVector",
    "PoolState",
    "marginal_price",
    "is_feasible",
    "execute_trade",
    "quote_output",
    "quote_input",
    "fee_adjusted",
]


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be a 1-D vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trade:
    """A signed trade vector in native asset units."""

    delta: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.delta, "delta")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("trade components must be finite")
        object.__setattr__(self, "delta", arr)

    @classmethod
    def zero(cls, n_assets: int) -> "Trade":
        return cls(np.zeros(n_assets))

    @classmethod
    def swap(cls, n_assets: int, asset_in: int, amount_in: float,
             asset_out: int, amount_out: float) -> "Trade":
        """Single-in/single-out trade: tender amount_in, withdraw amount_out."""
        if asset_in == asset_out:
            raise ValidationError("swap needs distinct asset indices")
        delta = np.zeros(n_assets)
        delta[asset_in] = amount_in
        delta[asset_out] = -amount_out
        return cls(delta)

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.delta == 0))

    def __len__(self) -> int:
        return self.delta.shape[0]


def fee_adjusted(trade: Trade, fee: float) -> np.ndarray:
    """gamma*delta_plus - delta_minus: the vector entering the psi check."""
    d = trade.delta
    return np.where(d > 0, fee * d, d)


@dataclass(frozen=True, eq=False)
class PriceVector:
    """Marginal price, normalized so the last asset (the numeraire) is 1."""

    components: np.ndarray

    def __post_init__(self):
        arr = np.array(self.components, dtype=float)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValidationError("price needs at least two components")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValidationError("price components must be finite and positive")
        arr = arr / arr[-1]
        arr[-1] = 1.0
        arr.setflags(write=False)
        object.__setattr__(self, "components", arr)

    def __len__(self) -> int:
        return self.components.shape[0]

    def ratio(self, i: int, j: int) -> float:
        """Units of asset j per unit of asset i."""
        return float(self.components[i] / self.components[j])


@dataclass(frozen=True, eq=False)
class PoolState:
    """A pool: trading-function spec, strictly positive reserves, fee."""

    spec: TradingFunctionSpec
    reserves: np.ndarray
    fee: float = 1.0

    def __post_init__(self):
        arr = _frozen_array(self.reserves, "reserves")
        if arr.shape[0] != self.spec.n_assets:
            raise ValidationError("reserves length must match spec.n_assets")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise DomainError("reserves must be finite and strictly positive")
        if not (0.0 < self.fee <= 1.0):
            raise ValidationError("fee must lie in (0, 1]")
        object.__setattr__(self, "reserves", arr)

    @property
    def n_assets(self) -> int:
        return self.spec.n_assets

    def psi(self) -> float:
        """Trading-function value at the current reserves (memoized)."""
        value = self.__dict__.get("_psi")
        if value is None:
            value = eval_psi(self.spec, self.reserves)
            object.__setattr__(self, "_psi", value)
        return value

    def tolerance(self) -> float:
        return 1e-9 * max(1.0, self.psi())

    def with_reserves(self, reserves) -> "PoolState":
        return PoolState(self.spec, reserves, self.fee)


def marginal_price(state: PoolState) -> PriceVector:
    """Gradient direction of psi at the current reserves, numeraire-normalized."""
    return PriceVector(grad_psi(state.spec, state.reserves))


def is_feasible(state: PoolState, trade: Trade) -> bool:
    """Whether the pool accepts the trade. Never raises; False on any violation."""
    d = trade.delta
    if d.shape[0] != state.n_assets:
        return False
    if np.any(state.reserves + d < 0):
        return False
    diff = psi_diff(
        state.spec, state.reserves, fee_adjusted(trade, state.fee),
        psi_value=state.psi(), validate=False,
    )
    return abs(diff) <= state.tolerance()


def execute_trade(state: PoolState, trade: Trade) -> PoolState:
    """Apply a feasible trade; reserves absorb the full tendered amount."""
    if not is_feasible(state, trade):
        raise TradeRejectedError("trade rejected: fails the feasibility check")
    return state.with_reserves(state.reserves + trade.delta)


def _bisect_down(f, lo: float, hi: float, rel_width: float = 1e-15) -> float:
    """Root of a decreasing function on [lo, hi] with f(lo) > 0 > f(hi)."""
    span = max(abs(hi), 1.0)
    while hi - lo > rel_width * span:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def quote_output(state: PoolState, asset_in: int, amount_in: float,
                 asset_out: int) -> Trade:
    """Solve for the unique feasible single-in/single-out trade.

    Bisection on the withdrawn amount over [0, R_out): the residual
    psi(R + gamma*x*e_in - o*e_out) - psi(R) is strictly decreasing in o.
    """
    n = state.n_assets
    if not (0 <= asset_in < n and 0 <= asset_out < n) or asset_in == asset_out:
        raise ValidationError("asset indices must be distinct and in range")
    if not (amount_in > 0 and np.isfinite(amount_in)):
        raise ValidationError("input amount must be positive and finite")

    r = state.reserves
    spec = state.spec
    psi0 = state.psi()
    paid_in = state.fee * amount_in

    def residual(amount_out: float) -> float:
        d = np.zeros(n)
        d[asset_in] = paid_in
        d[asset_out] = -amount_out
        return psi_diff(spec, r, d, psi_value=psi0, validate=False)

    r_out = float(r[asset_out])
    if residual(0.0) <= 0:
        # Input too small to move psi beyond the tolerance; output ~ 0.
        return Trade.swap(n, asset_in, amount_in, asset_out, 0.0)
    hi = r_out * (1.0 - 1e-15)
    if residual(hi) > 0:
        raise NoSolutionError(
            "no feasible output: the swap would require withdrawing the "
            f"entire reserve of asset {asset_out}"
        )
    amount_out = _bisect_down(residual, 0.0, hi)
    trade = Trade.swap(n, asset_in, amount_in, asset_out, amount_out)
    if not is_feasible(state, trade):
        raise NoSolutionError("quoted trade failed the feasibility check")
    return trade


def quote_input(state: PoolState, asset_out: int, amount_out: float,
                asset_in: int) -> Trade:
    """Solve for the input that funds a requested withdrawal.

    Mirror image of quote_output: the residual is increasing in the input,
    bracketed by doubling.
    """
    n = state.n_assets
    if not (0 <= asset_in < n and 0 <= asset_out < n) or asset_in == asset_out:
        raise ValidationError("asset indices must be distinct and in range")
    if not (0 < amount_out < float(state.reserves[asset_out])):
        raise NoSolutionError("requested output must lie inside the reserve")

    r = state.reserves
    spec = state.spec
    psi0 = state.psi()

    def residual(amount_in: float) -> float:
        d = np.zeros(n)
        d[asset_in] = state.fee * amount_in
        d[asset_out] = -amount_out
        return psi_diff(spec, r, d, psi_value=psi0, validate=False)

    hi = float(amount_out)
    for _ in range(200):
        if residual(hi) > 0:
            break
        hi *= 2.0
    else:
        raise NoSolutionError("could not bracket the funding input")
    amount_in = _bisect_down(lambda x: -residual(x), 0.0, hi)
    trade = Trade.swap(n, asset_in, amount_in, asset_out, amount_out)
    if not is_feasible(state, trade):
        raise NoSolutionError("quoted trade failed the feasibility check")
    return trade
