"""Constructing feasible probe trades from accept/reject queries alone.

The pool's trade check accepts a band of outputs around the exact-equality
surface (the feasibility tolerance), so "one valid trade" is really an
interval in output space. Everything here reduces to locating edges of
that band by doubling plus bisection:

* pure-input probes (tender x, withdraw nothing) are accepted up to
  x ~ tol / grad_i, so the per-asset acceptance edges give the price
  ratios c_i / c_j = x0_j / x0_i without touching the price oracle, which
  also makes probe construction immune to price-reporting mitigations;
* face-value swaps (output priced at those ratios) are accepted while the
  probe is small enough that slippage hides inside the tolerance band;
  the largest such input locates the pool's scale;
* from any accepted swap, bisecting the largest accepted output lands on
  the band's upper edge, a point whose feasibility residual is known
  exactly (minus the tolerance), which is what the scale solver wants.

Larger probes pin the reserves much more firmly (scale sensitivity grows
with the square of the probe fraction), so probes are walked up far past
the face-value edge, each step predicting the output from the trading
function fitted to the previous band edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attack import price_consistent_point, solve_scale
from .errors import ProbeError, SolverError
from .families import tol_feas_value
from .oracle import CfmmOracle
from .pool import PoolState, PriceVector, Trade, quote_output

__all__ = ["ProbeBand", "pure_input_edge", "coarse_price", "attack_probe", "centered_probe"]

_EXPAND_LIMIT = 1e30
_SHRINK_LIMIT = 1e-30
# band-edge precision: solver-grade for the final probe, fit-grade while walking
_FINAL_REL = 1e-15
_WALK_REL = 1e-11


@dataclass(frozen=True)
class ProbeBand:
    """Acceptance band of outputs for a fixed single-pair input."""

    asset_in: int
    asset_out: int
    amount_in: float
    output_lo: float
    output_hi: float

    @property
    def output_mid(self) -> float:
        return 0.5 * (self.output_lo + self.output_hi)

    def trade(self, n_assets: int, output: float) -> Trade:
        return Trade.swap(n_assets, self.asset_in, self.amount_in,
                          self.asset_out, output)


def _doubling_edge(accept, start: float, what: str) -> tuple[float, float]:
    """(last accepted, first rejected) on a geometric grid through start."""
    x = float(start)
    if accept(x):
        hi = 2.0 * x
        while accept(hi):
            x, hi = hi, 2.0 * hi
            if hi > _EXPAND_LIMIT:
                raise ProbeError(f"{what}: no rejection up to 1e30")
        return x, hi
    lo = 0.5 * x
    while not accept(lo):
        x, lo = lo, 0.5 * lo
        if lo < _SHRINK_LIMIT:
            raise ProbeError(f"{what}: no acceptance down to 1e-30")
    return lo, x


def _edge_bisect(accept, lo: float, hi: float, rel: float) -> tuple[float, float]:
    """Tighten (accepted lo, rejected hi) to relative width ``rel``."""
    while hi - lo > rel * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if accept(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def pure_input_edge(oracle: CfmmOracle, asset: int, start: float = 1.0,
                    rel: float = 1e-12) -> float:
    """Largest accepted pure deposit of one asset.

    The deposit moves psi by about fee * x * grad_asset, so the edge sits
    at tol / (fee * grad_asset): inversely proportional to the price
    component.
    """
    n = oracle.spec.n_assets

    def accept(x: float) -> bool:
        delta = np.zeros(n)
        delta[asset] = x
        return oracle.check_trade(Trade(delta))

    lo, hi = _doubling_edge(accept, start, f"pure-input probe on asset {asset}")
    lo, hi = _edge_bisect(accept, lo, hi, rel)
    return 0.5 * (lo + hi)


def coarse_price(oracle: CfmmOracle, start: float = 1.0,
                 rel: float = 1e-12) -> PriceVector:
    """Price estimate from pure-input acceptance edges (no price query).

    Accurate to roughly ``rel`` plus the tolerance band's curvature bias
    (~1e-9 relative); used to seed probe construction when the price
    oracle is off limits or untrusted.
    """
    edges = [pure_input_edge(oracle, a, start, rel) for a in range(oracle.spec.n_assets)]
    return PriceVector([edges[-1] / e for e in edges])


def _make_accept(oracle, asset_in, asset_out):
    n = oracle.spec.n_assets

    def accept(x: float, o: float) -> bool:
        return oracle.check_trade(Trade.swap(n, asset_in, x, asset_out, o))

    return accept


def _face_value_edge(accept, fee, ratio, start):
    """Largest input whose marginal-rate-priced swap is still accepted."""
    x_acc, _ = _doubling_edge(lambda x: accept(x, fee * x * ratio), start,
                              "face-value probe")
    return x_acc, fee * x_acc * ratio


def _upper_edge(accept, x: float, o_accepted: float, rel: float) -> float:
    """Largest accepted output at input x, from an accepted point."""
    offset = 2.0**-40
    while accept(x, o_accepted * (1.0 + offset)):
        offset *= 2.0
        if offset > 1e12:
            raise ProbeError("acceptance band has no upper edge")
    lo = o_accepted * (1.0 + offset / 2.0) if offset > 2.0**-40 else o_accepted
    hi = o_accepted * (1.0 + offset)
    lo, hi = _edge_bisect(lambda o: accept(x, o), lo, hi, rel)
    return lo


def _lower_edge(accept, x: float, o_accepted: float, rel: float) -> float:
    """Smallest accepted output at input x, from an accepted point."""
    offset = 2.0**-40
    while True:
        candidate = o_accepted * (1.0 - offset)
        if offset >= 1.0 or candidate <= 0.0:
            if accept(x, 0.0):
                return 0.0
            rejected, accepted = 0.0, o_accepted * (1.0 - offset / 2.0)
            break
        if not accept(x, candidate):
            rejected = candidate
            accepted = o_accepted * (1.0 - offset / 2.0) if offset > 2.0**-40 else o_accepted
            break
        offset *= 2.0
    rejected, accepted = _edge_bisect(
        lambda o: not accept(x, o), rejected, accepted, rel
    )
    return accepted


def _band_edges(accept, x, o_accepted, rel) -> tuple[float, float]:
    return (_lower_edge(accept, x, o_accepted, rel),
            _upper_edge(accept, x, o_accepted, rel))


class _ProbeWalker:
    """Walks a single-pair probe up in input size, staying in the band.

    Predictions come from the trading-function form: the scale k is fitted
    to the latest band edge against an iso-price ray of the (feasibility
    derived) coarse price, so walking keeps working when the reported
    price is noisy or missing. Flat or non-homogeneous families fall back
    to linear extrapolation of the band midpoint.
    """

    def __init__(self, oracle: CfmmOracle, asset_in: int, asset_out: int,
                 hint: PriceVector):
        self.oracle = oracle
        self.spec = oracle.spec
        self.fee = oracle.fee
        self.asset_in = asset_in
        self.asset_out = asset_out
        self.accept = _make_accept(oracle, asset_in, asset_out)
        self.ratio = hint.ratio(asset_in, asset_out)
        self.r0 = None
        if self.spec.is_homogeneous and self.spec.strictly_concave:
            self.r0 = price_consistent_point(self.spec, hint)

    def start(self, start_size: float) -> tuple[float, float]:
        """Face-value edge: the largest input needing no model at all."""
        return _face_value_edge(self.accept, self.fee, self.ratio, start_size)

    def _predictions(self, x_next, x, o_hi, o_mid):
        if self.r0 is not None:
            n = self.spec.n_assets
            edge_trade = Trade.swap(n, self.asset_in, x, self.asset_out, o_hi)
            try:
                k = solve_scale(
                    self.spec, self.r0, edge_trade, self.fee,
                    residual_target=lambda psi: -tol_feas_value(psi),
                )
                model = PoolState(self.spec, k * self.r0, self.fee)
                quoted = quote_output(model, self.asset_in, x_next, self.asset_out)
                yield -float(quoted.delta[self.asset_out])
            except SolverError:
                pass
        if o_mid is not None:
            yield o_mid * (x_next / x)

    def walk(self, x: float, o_accepted: float, x_target: float, *,
             factor: float = 8.0, require_target: bool = False,
             track_mid: bool = False) -> tuple[float, float, float | None]:
        """Extend the accepted probe from x toward x_target.

        Returns (x, upper_edge, mid or None) for the largest size reached.
        With require_target the walk must reach x_target exactly or raise;
        otherwise stalling settles for the largest accepted size.
        """
        need_mid = track_mid or self.r0 is None
        o_hi = _upper_edge(self.accept, x, o_accepted, _WALK_REL)
        o_mid = None
        if need_mid:
            o_mid = 0.5 * (_lower_edge(self.accept, x, o_accepted, _WALK_REL) + o_hi)
        while x < x_target:
            x_next = min(factor * x, x_target)
            placed = False
            while not placed:
                for o_pred in self._predictions(x_next, x, o_hi, o_mid):
                    if self.accept(x_next, o_pred):
                        x = x_next
                        o_hi = _upper_edge(self.accept, x, o_pred, _WALK_REL)
                        if need_mid:
                            o_mid = 0.5 * (
                                _lower_edge(self.accept, x, o_pred, _WALK_REL) + o_hi
                            )
                        placed = True
                        break
                if not placed:
                    x_next = math.sqrt(x * x_next)
                    if x_next / x - 1.0 < 1e-9:
                        if require_target:
                            raise ProbeError(
                                "probe walk stalled: cannot extend the "
                                f"accepted input beyond {x!r}"
                            )
                        return x, o_hi, o_mid
        return x, o_hi, o_mid


def attack_probe(
    oracle: CfmmOracle,
    asset_in: int = 0,
    asset_out: int | None = None,
    start: float = 1.0,
    growth: float = 1000.0,
) -> Trade:
    """A nonzero accepted trade on the band's upper output edge.

    The returned trade's feasibility residual equals minus the pool's
    tolerance (to bisection precision), so reserve recovery can solve for
    that exact residual instead of treating the probe as an equality
    trade. Construction uses only accept/reject queries: coarse price
    ratios from pure-input edges, then a face-value probe walked up by
    ``growth`` (stalling early near reserve depletion is fine). The walk
    matters: scale sensitivity grows quadratically in probe size, so a
    face-value-edge probe alone would amplify any price-report error by
    five orders of magnitude more than this one.
    """
    spec = oracle.spec
    n = spec.n_assets
    if asset_out is None:
        asset_out = n - 1
    edge_in = pure_input_edge(oracle, asset_in, start, rel=1e-7)
    edge_out = pure_input_edge(oracle, asset_out, start, rel=1e-7)
    hint_components = np.ones(n)
    hint_components[asset_in] = edge_out / edge_in
    hint_components[asset_out] = 1.0
    walker = _ProbeWalker(oracle, asset_in, asset_out, PriceVector(hint_components))
    x_edge, o_face = walker.start(min(start, edge_in * 1e6))
    x, o_hi, _ = walker.walk(x_edge, o_face, growth * x_edge)
    final = _upper_edge(walker.accept, x, o_hi * (1.0 - 1e-13), _FINAL_REL)
    return Trade.swap(n, asset_in, x, asset_out, final)


def centered_probe(
    oracle: CfmmOracle,
    asset_in: int,
    asset_out: int,
    amount_in: float,
    price_hint: PriceVector,
    *,
    nudge: float = 1e-6,
) -> Trade:
    """Accepted trade of a requested input size, centered in the band.

    The band center has feasibility residual ~0, so the trade under-asks
    by ``nudge`` (relative) to keep c.delta strictly positive even for
    flat (constant-sum) pools, which the price-recovery LP requires. The
    default sits two decades above the LP solver's degeneracy floor and
    well below the curvature signal of the smallest useful probe.
    """
    n = oracle.spec.n_assets
    walker = _ProbeWalker(oracle, asset_in, asset_out, price_hint)
    fair = oracle.fee * amount_in * walker.ratio
    if walker.accept(amount_in, fair):
        x, o_acc = amount_in, fair
    else:
        x_edge, o_face = walker.start(min(amount_in, 1.0))
        x, _o_hi, o_mid = walker.walk(
            x_edge, o_face, amount_in, factor=4.0,
            require_target=True, track_mid=True,
        )
        o_acc = o_mid
    lo, hi = _band_edges(walker.accept, x, o_acc, _FINAL_REL)
    mid = 0.5 * (lo + hi)
    return Trade.swap(n, asset_in, x, asset_out, mid * (1.0 - nudge))
