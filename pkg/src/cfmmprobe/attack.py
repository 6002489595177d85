"""Reserve reconstruction from a marginal price and one feasible trade.

The central fact this module operationalizes: for a strictly concave,
increasing, 1-homogeneous trading function, the reserves consistent with a
marginal price c form a ray {k * R0 | k > 0}, and along that ray the
residual

    g(k) = psi(k*R0 + delta') - psi(k*R0)

of a genuinely feasible nonzero trade is negative for k below the true
scale and positive above it. Reconstruction therefore splits into a
closed-form ray point plus a guarded 1-D bisection for k. For the
constant-product two-asset pool the whole system collapses to linear
algebra; for the non-homogeneous curve_like family the full (n+1)-variable
system is solved by damped Newton and flagged as lacking a uniqueness
guarantee.

``residual_target`` lets callers solve for a trade whose residual is a
known nonzero value (an acceptance-band edge) instead of an exact-equality
trade; it receives the candidate's trading-function value and returns the
expected residual there (the band edges sit at exactly minus/plus the
feasibility tolerance, which is a function of that value alone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    BracketError,
    ConvergenceError,
    SingularSystemError,
    UnsupportedFamilyError,
    ValidationError,
)
from .families import (
    Family,
    TradingFunctionSpec,
    eval_psi,
    grad_psi,
    psi_diff,
    tol_feas_value,
)
from .oracle import CfmmOracle
from .pool import PriceVector, Trade, fee_adjusted

__all__ = [
    "RecoveryResult",
    "recover_reserves_cp_closed_form",
    "price_consistent_point",
    "solve_scale",
    "recover_reserves",
    "recover_reserves_constant_sum",
]

ResidualTarget = Callable[[float], float]

_SCALE_MIN = 1e-12
_SCALE_MAX = 1e12


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of a reserve reconstruction.

    ``lam`` is the nonnegative multiplier relating the gradient to the
    reported price, grad psi(R) = lam * c. ``unique`` is True when the
    ray-uniqueness theory applies (declared homogeneity degree), False for
    the curve_like Newton path where uniqueness is unproven.
    """

    reserves: np.ndarray
    lam: float
    residual_price: float
    residual_trade: float
    unique: bool


def _residuals(spec, reserves, price, trade, fee, lam=None) -> tuple[float, float, float]:
    grad = grad_psi(spec, reserves)
    c = price.components
    if lam is None:
        lam = float(np.dot(grad, c) / np.dot(c, c))
    residual_price = float(np.linalg.norm(grad - lam * c))
    residual_trade = abs(psi_diff(spec, reserves, fee_adjusted(trade, fee)))
    return lam, residual_price, residual_trade


def recover_reserves_cp_closed_form(price: PriceVector, trade: Trade) -> RecoveryResult:
    """Two-asset constant-product reconstruction by linear algebra.

    Solves  c1*R1 - c2*R2 = 0  (iso-price ray) together with
    Delta2*R1 + Delta1*R2 = -Delta1*Delta2  (feasibility of the trade,
    expanded from (R1+D1)(R2+D2) = R1*R2). The system is singular exactly
    when c.Delta = 0, which no genuinely feasible nonzero trade can
    produce: strict concavity forces c.Delta > 0.
    """
    if len(price) != 2 or len(trade) != 2:
        raise ValidationError("closed form applies to two-asset pools only")
    if trade.is_zero:
        raise ValidationError("trade must be nonzero")
    c1, c2 = map(float, price.components)
    d1, d2 = map(float, trade.delta)
    det = c1 * d1 + c2 * d2
    scale = abs(c1 * d1) + abs(c2 * d2)
    if abs(det) <= 1e-12 * scale:
        raise SingularSystemError(
            "degenerate price/trade pair: c.Delta = 0 cannot come from a "
            "feasible nonzero trade"
        )
    r1 = -d1 * d2 * c2 / det
    r2 = -d1 * d2 * c1 / det
    if not (r1 > 0 and r2 > 0):
        raise SingularSystemError(
            "price/trade pair is inconsistent with positive reserves"
        )
    spec = TradingFunctionSpec.constant_product(2)
    reserves = np.array([r1, r2])
    lam = 1.0 / (2.0 * math.sqrt(c1 * c2))
    _, residual_price, residual_trade = _residuals(spec, reserves, price, trade, 1.0, lam=lam)
    return RecoveryResult(reserves, lam, residual_price, residual_trade, unique=True)


def price_consistent_point(spec: TradingFunctionSpec, price: PriceVector) -> np.ndarray:
    """One point R0 on the iso-price ray, normalized so psi(R0) = 1.

    For the weighted geometric-mean families the gradient is
    psi(R) * w / R, so grad parallel to c pins the ratios R_i ~ w_i / c_i
    and the psi(R0) = 1 normalization fixes the scale in closed form.
    """
    if len(price) != spec.n_assets:
        raise ValidationError("price dimension must match spec.n_assets")
    if spec.family is Family.CONSTANT_SUM:
        raise UnsupportedFamilyError(
            "constant_sum pools report the same price everywhere: the "
            "iso-price set is not a ray (use recover_reserves_constant_sum)"
        )
    if spec.family is Family.CURVE_LIKE:
        raise UnsupportedFamilyError(
            "curve_like has no homogeneity degree; its iso-price set is "
            "not a ray (recover_reserves uses the Newton path instead)"
        )
    direction = spec.weight_array / price.components
    r0 = direction / eval_psi(spec, direction)
    return r0


def solve_scale(
    spec: TradingFunctionSpec,
    r0: np.ndarray,
    trade: Trade,
    fee: float = 1.0,
    *,
    residual_target: ResidualTarget | None = None,
) -> float:
    """Unique k > 0 with psi(k*R0 + delta') = psi(k*R0) (+ optional target).

    Bracket by geometric expansion from k = 1 using the sign structure of
    g (negative below the root, positive above; points where k*R0 + delta'
    leaves the domain count as negative), then bisect. Termination is on
    bracket width <= 1e-14 * k rather than on |g| alone: the root is
    quadratically flat in the probe size, so a residual-based stop would
    surrender most of the attainable precision. |g| <= tol_feas is
    verified before returning.
    """
    r0 = np.asarray(r0, dtype=float)
    if not spec.is_homogeneous:
        raise UnsupportedFamilyError(
            "scale solving needs a homogeneous trading function"
        )
    if trade.is_zero:
        raise ValidationError("trade must be nonzero")
    if not np.all(r0 > 0):
        raise ValidationError("ray point must be strictly positive")
    adjusted = fee_adjusted(trade, fee)
    psi0 = eval_psi(spec, r0)

    def h(k: float) -> float:
        # psi(k R0) = k psi(R0) by 1-homogeneity: skip the re-evaluation
        psi_k = k * psi0
        value = psi_diff(spec, k * r0, adjusted, psi_value=psi_k, validate=False)
        if residual_target is not None and math.isfinite(value):
            value -= residual_target(psi_k)
        return value

    k = 1.0
    v = h(k)
    if v == 0.0:
        return k
    if v < 0:
        lo, hi = k, 2.0 * k
        v_hi = h(hi)
        while v_hi < 0:
            lo, hi = hi, 2.0 * hi
            if hi > _SCALE_MAX:
                raise BracketError(
                    "no sign change of the scale residual up to k = 1e12"
                )
            v_hi = h(hi)
        if v_hi == 0.0:
            return hi
    else:
        lo, hi = 0.5 * k, k
        v_lo = h(lo)
        while v_lo > 0:
            lo, hi = 0.5 * lo, lo
            if lo < _SCALE_MIN:
                raise BracketError(
                    "no sign change of the scale residual down to k = 1e-12"
                )
            v_lo = h(lo)
        if v_lo == 0.0:
            return lo

    # invariant: h(lo) < 0 < h(hi)
    while hi - lo > 1e-14 * lo:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        v_mid = h(mid)
        if v_mid == 0.0:
            lo = hi = mid
            break
        if v_mid < 0:
            lo = mid
        else:
            hi = mid
    k = 0.5 * (lo + hi)
    if abs(h(k)) > tol_feas_value(k * psi0):
        raise ConvergenceError(
            "scale bisection converged onto a feasibility cliff, not a root "
            "(price and trade are mutually inconsistent)"
        )
    return k


def recover_reserves(
    spec: TradingFunctionSpec,
    price: PriceVector,
    trade: Trade,
    fee: float = 1.0,
    *,
    residual_target: ResidualTarget | None = None,
) -> RecoveryResult:
    """Solve grad psi(R) = lam*c, psi(R + delta') = psi(R) for R and lam."""
    if spec.family is Family.CONSTANT_SUM:
        raise UnsupportedFamilyError(
            "constant_sum is not strictly concave; reserve recovery needs "
            "recover_reserves_constant_sum (feasibility binary search)"
        )
    if spec.family is Family.CURVE_LIKE:
        return _recover_curve_like(spec, price, trade, fee, residual_target)
    r0 = price_consistent_point(spec, price)
    k = solve_scale(spec, r0, trade, fee, residual_target=residual_target)
    reserves = k * r0
    lam, residual_price, residual_trade = _residuals(spec, reserves, price, trade, fee)
    return RecoveryResult(reserves, lam, residual_price, residual_trade, unique=True)


def _curve_like_ray(spec, c: np.ndarray, lam: float) -> np.ndarray:
    """Exact iso-price point: grad_i = alpha + beta/R_i^2 = lam*c_i."""
    return np.sqrt(spec.beta / (lam * c - spec.alpha))


def _recover_curve_like(spec, price, trade, fee, residual_target) -> RecoveryResult:
    """Newton on the full (R, lam) system, seeded from the iso-price curve.

    The iso-price set Q(c) of curve_like is parameterized exactly by
    lam > alpha / min(c), so the trade residual restricted to Q(c) is a
    1-D function of lam; a log-grid scan plus bisection lands next to a
    solution and damped Newton polishes it. Uniqueness is unproven for
    non-homogeneous trading functions, so unique=False.
    """
    if trade.is_zero:
        raise ValidationError("trade must be nonzero")
    c = price.components
    adjusted = fee_adjusted(trade, fee)
    lam_min = spec.alpha / float(np.min(c))

    def on_ray_residual(lam: float) -> float:
        reserves = _curve_like_ray(spec, c, lam)
        value = psi_diff(spec, reserves, adjusted)
        if residual_target is not None and math.isfinite(value):
            value -= residual_target(eval_psi(spec, reserves))
        return value

    # lam -> lam_min gives huge reserves (residual > 0, trade cheap);
    # lam -> inf gives tiny reserves (residual -inf). Scan for the crossing.
    grid = lam_min * (1.0 + np.logspace(-12.0, 12.0, 481))
    values = np.array([on_ray_residual(l) for l in grid])
    lam_est = None
    for a, b, va, vb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if va == 0.0:
            lam_est = a
            break
        if va > 0 > vb or (va > 0 and vb == 0.0):
            lo, hi = a, b
            for _ in range(200):
                if hi - lo <= 1e-15 * lo:
                    break
                mid = 0.5 * (lo + hi)
                if on_ray_residual(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            lam_est = 0.5 * (lo + hi)
            break
    if lam_est is None:
        finite = np.isfinite(values)
        if not np.any(finite):
            raise ConvergenceError("no admissible iso-price point for this trade")
        lam_est = float(grid[finite][np.argmin(np.abs(values[finite]))])

    reserves = _curve_like_ray(spec, c, lam_est)
    lam = lam_est

    def system(r: np.ndarray, l: float) -> np.ndarray:
        top = grad_psi(spec, r) - l * c
        bottom = psi_diff(spec, r, adjusted)
        if residual_target is not None and math.isfinite(bottom):
            bottom -= residual_target(eval_psi(spec, r))
        return np.append(top, bottom)

    def rel_residual(f: np.ndarray, r: np.ndarray) -> float:
        grad_scale = max(1.0, float(np.max(np.abs(grad_psi(spec, r)))))
        psi_scale = max(1.0, abs(eval_psi(spec, r)))
        return max(
            float(np.max(np.abs(f[:-1]))) / grad_scale,
            abs(float(f[-1])) / psi_scale,
        )

    f = system(reserves, lam)
    if not np.all(np.isfinite(f)):
        raise ConvergenceError("curve_like Newton initialized outside the domain")
    for _ in range(100):
        if rel_residual(f, reserves) <= 1e-10:
            break
        n = spec.n_assets
        jac = np.zeros((n + 1, n + 1))
        jac[:n, :n] = np.diag(-2.0 * spec.beta / reserves**3)
        jac[:n, n] = -c
        shifted = reserves + adjusted
        jac[n, :n] = grad_psi(spec, shifted) - grad_psi(spec, reserves)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular Jacobian in curve_like Newton") from exc
        damping = 1.0
        norm = np.linalg.norm(f)
        for _ in range(60):
            r_new = reserves + damping * step[:n]
            lam_new = lam + damping * step[n]
            if np.all(r_new > 0) and np.all(r_new + adjusted > 0):
                f_new = system(r_new, lam_new)
                if np.linalg.norm(f_new) <= (1.0 - 1e-4 * damping) * norm:
                    reserves, lam, f = r_new, lam_new, f_new
                    break
            damping *= 0.5
        else:
            raise ConvergenceError("curve_like Newton stalled (no descent step)")
    else:
        raise ConvergenceError("curve_like Newton did not converge in 100 iterations")

    lam_fit, residual_price, residual_trade = _residuals(
        spec, reserves, price, trade, fee
    )
    return RecoveryResult(reserves, lam_fit, residual_price, residual_trade, unique=False)


def recover_reserves_constant_sum(oracle: CfmmOracle, eps: float) -> np.ndarray:
    """Per-asset binary search on withdrawal feasibility.

    A constant-sum pool prices every trade identically, so feasibility of
    a 1:1 (fee-adjusted) swap withdrawing y of asset j reduces to
    y <= R_j. Doubling finds the rejection boundary, bisection pins it to
    eps; roughly log2(R_j) + log2(R_j/eps) queries per asset.
    """
    spec = oracle.spec
    if spec.family is not Family.CONSTANT_SUM:
        raise UnsupportedFamilyError("binary-search recovery requires a constant_sum pool")
    if not (eps > 0):
        raise ValidationError("eps must be positive")
    n = spec.n_assets
    fee = oracle.fee
    estimates = []
    for asset_out in range(n):
        asset_in = (asset_out + 1) % n

        def accept(withdraw: float) -> bool:
            probe = Trade.swap(n, asset_in, withdraw / fee, asset_out, withdraw)
            return oracle.check_trade(probe)

        y = 1.0
        if accept(y):
            lo, hi = y, 2.0 * y
            while accept(hi):
                lo, hi = hi, 2.0 * hi
                if hi > 1e30:
                    raise BracketError("constant-sum probe never rejected")
        else:
            hi = y
            lo = 0.5 * y
            while not accept(lo):
                hi, lo = lo, 0.5 * lo
                if lo < 1e-30:
                    raise BracketError("constant-sum probe never accepted")
        while hi - lo > eps:
            mid = 0.5 * (lo + hi)
            if accept(mid):
                lo = mid
            else:
                hi = mid
        estimates.append(0.5 * (lo + hi))
    return np.array(estimates)
