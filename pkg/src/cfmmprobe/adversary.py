"""End-to-end attacks driven purely through the oracle interface.

``recover_trade`` is the full five-step attack: reconstruct the reserves
before and after the victim's hidden trade (price query + one probe trade
each) and subtract. ``estimate_price_from_trades`` replaces the price
query with n feasibility probes and a small linear program, for pools
that refuse to report a marginal price.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .attack import (
    RecoveryResult,
    recover_reserves,
    recover_reserves_constant_sum,
)
from .errors import (
    DegenerateProbesError,
    InfeasibleLPError,
    SolverError,
    ValidationError,
)
from .families import Family, TradingFunctionSpec, tol_feas_value
from .oracle import CfmmOracle
from .pool import PriceVector, Trade
from .probes import attack_probe, centered_probe, coarse_price

__all__ = [
    "recover_reserves_from_oracle",
    "recover_trade",
    "estimate_price_from_trades",
]


def recover_reserves_from_oracle(
    oracle: CfmmOracle,
    *,
    start: float = 1.0,
    cs_eps: float = 1e-6,
) -> RecoveryResult:
    """Reconstruct the oracle's hidden reserves from its public queries.

    Queries the marginal price, builds one band-edge probe trade, and
    solves the nonlinear system for that probe's known residual. If the
    scale solve fails to bracket (it cannot for an honestly reported
    price, but a noisy price can push the probe onto the wrong side of
    the ray), the reversed probe direction is tried: the bracketing signs
    of the two directions are always opposite.
    """
    spec = oracle.spec
    fee = oracle.fee
    if spec.family is Family.CONSTANT_SUM:
        reserves = recover_reserves_constant_sum(oracle, cs_eps)
        return RecoveryResult(reserves, 1.0, 0.0, 0.0, unique=True)
    price = oracle.marginal_price()
    n = spec.n_assets

    def target(psi_candidate: float) -> float:
        # the probe sits on the band's upper edge: residual = -tolerance
        return -tol_feas_value(psi_candidate)

    last_error: SolverError | None = None
    for asset_in, asset_out in ((0, n - 1), (n - 1, 0)):
        probe = attack_probe(oracle, price, asset_in, asset_out, start)
        try:
            return recover_reserves(spec, price, probe, fee, residual_target=target)
        except SolverError as exc:
            last_error = exc
    raise last_error


def recover_trade(
    oracle_before: CfmmOracle,
    oracle_after: CfmmOracle,
    spec: TradingFunctionSpec | None = None,
    fee: float | None = None,
    *,
    start: float = 1.0,
    cs_eps: float = 1e-6,
) -> Trade:
    """Reconstruct the hidden trade between two pool snapshots.

    ``spec``/``fee`` default to the oracles' public values; passing them
    explicitly just asserts what the attacker thinks they are.
    """
    spec = spec or oracle_before.spec
    fee = fee if fee is not None else oracle_before.fee
    if spec != oracle_before.spec or spec != oracle_after.spec:
        raise ValidationError("oracles disagree with the supplied spec")
    before = recover_reserves_from_oracle(oracle_before, start=start, cs_eps=cs_eps)
    after = recover_reserves_from_oracle(oracle_after, start=start, cs_eps=cs_eps)
    return Trade(after.reserves - before.reserves)


def estimate_price_from_trades(oracle: CfmmOracle, probe_size: float) -> PriceVector:
    """Marginal price from feasibility queries alone (no price oracle).

    Builds one feasible probe of input size ``probe_size`` per exchange
    direction (i -> i+1 cyclically), each centered in the acceptance band
    with a slight conservative nudge so the price inequality c.delta >= 1
    (after scaling) is strict, then solves

        minimize sum(c)  subject to  c . delta_i >= 1,  c >= 0

    and renormalizes to the numeraire. The estimate converges linearly in
    probe_size for strictly concave pools and is exact for constant-sum.
    """
    if not (probe_size > 0 and np.isfinite(probe_size)):
        raise ValidationError("probe_size must be positive and finite")
    spec = oracle.spec
    n = spec.n_assets
    hint = coarse_price(oracle, start=max(probe_size, 1e-12))

    probes = []
    for asset_in in range(n):
        asset_out = (asset_in + 1) % n
        probes.append(
            centered_probe(oracle, asset_in, asset_out, probe_size, hint)
        )
    matrix = np.vstack([p.delta for p in probes])
    if np.linalg.matrix_rank(matrix) < n:
        raise DegenerateProbesError("probe trades are linearly dependent")

    result = linprog(
        c=np.ones(n),
        A_ub=-matrix,
        b_ub=-np.ones(n),
        bounds=[(0.0, None)] * n,
        method="highs",
    )
    if not result.success:
        raise InfeasibleLPError(f"price LP failed: {result.message}")
    estimate = np.asarray(result.x, dtype=float)
    if np.any(estimate <= 0):
        raise DegenerateProbesError(
            "price LP returned a boundary solution; probes are too degenerate"
        )
    return PriceVector(estimate)
