"""Numeric checks of the geometric facts behind unique reserve recovery.

Two executable properties:

* ray invariance — scaling the reserves of a 1-homogeneous pool leaves
  the normalized marginal price unchanged (the iso-price set is a ray).
  curve_like violates this off the all-equal diagonal, which is the
  counterexample showing homogeneity genuinely matters;
* scale sign pattern — for a trade feasible at R, the residual
  g(k) = psi(k*R + delta) - psi(k*R) is strictly negative for k < 1 and
  strictly positive for k > 1. This is the uniqueness statement in the
  form a computer can check on a grid.

These are dense-sample checks: evidence for continuum statements, not
proofs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .families import TradingFunctionSpec, psi_diff, tol_feas
from .pool import PoolState, Trade, marginal_price

__all__ = ["GeometryProperty", "GeometryReport", "verify_ray_invariance",
           "scan_scale_sign", "default_scale_grid"]

RAY_TOLERANCE = 1e-9


class GeometryProperty(str, enum.Enum):
    RAY_INVARIANCE = "ray_invariance"
    SCALE_SIGN_PATTERN = "scale_sign_pattern"


@dataclass(frozen=True)
class GeometryReport:
    spec_id: str
    property: GeometryProperty
    samples: int
    max_violation: float
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", self.max_violation <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "spec_id": self.spec_id,
            "property": self.property.value,
            "samples": self.samples,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def default_scale_grid(lo: float = 0.1, hi: float = 10.0, points: int = 50) -> np.ndarray:
    """Logarithmic scale grid; the defaults straddle k=1 without touching it."""
    return np.geomspace(lo, hi, points)


def verify_ray_invariance(spec: TradingFunctionSpec, reserves, scales) -> GeometryReport:
    """Max relative change of the normalized price along {k R | k in scales}."""
    reserves = np.asarray(reserves, dtype=float)
    base = marginal_price(PoolState(spec, reserves)).components
    worst = 0.0
    count = 0
    for k in np.asarray(scales, dtype=float):
        if not k > 0:
            raise ValueError("scales must be positive")
        scaled = marginal_price(PoolState(spec, k * reserves)).components
        deviation = float(np.max(np.abs(scaled - base) / base))
        worst = max(worst, deviation)
        count += 1
    return GeometryReport(
        spec_id=spec.describe(),
        property=GeometryProperty.RAY_INVARIANCE,
        samples=count,
        max_violation=worst,
        tolerance=RAY_TOLERANCE,
    )


def scan_scale_sign(spec: TradingFunctionSpec, reserves, trade: Trade, grid) -> GeometryReport:
    """Check the sign of g(k) = psi(kR + delta) - psi(kR) over a scale grid.

    Expected: negative below k=1, positive above; points where kR + delta
    leaves the domain count as negative (the trade is simply infeasible
    there). At k = 1 exactly, |g| must sit inside the feasibility band.
    The violation at each grid point is the wrong-signed magnitude of g,
    so any pass has max_violation == 0.
    """
    reserves = np.asarray(reserves, dtype=float)
    delta = trade.delta
    worst = 0.0
    count = 0
    for k in np.asarray(grid, dtype=float):
        if not k > 0:
            raise ValueError("grid scales must be positive")
        g = psi_diff(spec, k * reserves, delta)
        if abs(k - 1.0) <= 1e-12:
            violation = max(0.0, abs(g) - tol_feas(spec, reserves))
        elif k < 1.0:
            violation = max(0.0, g) if math.isfinite(g) else 0.0
        else:
            violation = max(0.0, -g) if math.isfinite(g) else math.inf
        worst = max(worst, violation)
        count += 1
    return GeometryReport(
        spec_id=spec.describe(),
        property=GeometryProperty.SCALE_SIGN_PATTERN,
        samples=count,
        max_violation=worst,
        tolerance=0.0,
    )
