"""Trading-function families and their calculus.

A pool's trading function maps strictly positive reserves to a scalar.
Four families are supported:

  constant_product   psi(R) = (prod_i R_i)^(1/n)         (geometric mean)
  constant_mean      psi(R) = prod_i R_i^w_i             (weighted, sum w = 1)
  constant_sum       psi(R) = sum_i R_i
  curve_like         psi(R) = alpha*sum_i R_i - beta*sum_i 1/R_i

The first three are 1-homogeneous; curve_like is strictly concave and
increasing on R > 0 but not homogeneous of any degree, which is exactly
why it is included (its iso-price sets are not rays).

All functions here are pure and operate on plain numpy arrays; the pool
wrapper types live in :mod:`cfmmprobe.pool`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedFamilyError, ValidationError

__all__ = [
    "Family",
    "TradingFunctionSpec",
    "eval_psi",
    "grad_psi",
    "psi_diff",
    "tol_feas",
    "tol_feas_value",
    "spec_to_dict",
    "spec_from_dict",
]

_WEIGHT_SUM_TOL = 1e-12


class Family(str, enum.Enum):
    CONSTANT_PRODUCT = "constant_product"
    CONSTANT_MEAN = "constant_mean"
    CONSTANT_SUM = "constant_sum"
    CURVE_LIKE = "curve_like"


@dataclass(frozen=True)
class TradingFunctionSpec:
    """Immutable description of a trading function.

    Weights are stored as a tuple so the spec stays hashable; use
    :attr:`weight_array` for numeric work. ``homogeneity_degree`` is 1.0
    for the homogeneous families and None for curve_like.
    """

    family: Family
    n_assets: int = 2
    weights: tuple[float, ...] | None = None
    alpha: float | None = None
    beta: float | None = None
    params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if self.n_assets < 2:
            raise ValidationError("pool needs at least 2 assets")
        if fam is Family.CONSTANT_MEAN:
            if self.weights is None:
                raise ValidationError("constant_mean requires weights")
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (self.n_assets,):
                raise ValidationError("weights length must equal n_assets")
            if not np.all(w > 0):
                raise ValidationError("weights must be strictly positive")
            if abs(float(w.sum()) - 1.0) > _WEIGHT_SUM_TOL:
                raise ValidationError("weights must sum to 1 within 1e-12")
            object.__setattr__(self, "weights", tuple(float(x) for x in w))
        elif self.weights is not None:
            raise ValidationError("weights are only valid for constant_mean")
        if fam is Family.CURVE_LIKE:
            if self.alpha is None or self.beta is None:
                raise ValidationError("curve_like requires alpha and beta")
            if not (self.alpha > 0 and self.beta > 0):
                raise ValidationError("curve_like needs alpha > 0 and beta > 0")
        elif self.alpha is not None or self.beta is not None:
            raise ValidationError("alpha/beta are only valid for curve_like")

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant_product(cls, n_assets: int = 2) -> "TradingFunctionSpec":
        return cls(Family.CONSTANT_PRODUCT, n_assets=n_assets)

    @classmethod
    def constant_mean(cls, weights) -> "TradingFunctionSpec":
        w = tuple(float(x) for x in weights)
        return cls(Family.CONSTANT_MEAN, n_assets=len(w), weights=w)

    @classmethod
    def constant_sum(cls, n_assets: int = 2) -> "TradingFunctionSpec":
        return cls(Family.CONSTANT_SUM, n_assets=n_assets)

    @classmethod
    def curve_like(cls, alpha: float, beta: float, n_assets: int = 2) -> "TradingFunctionSpec":
        return cls(Family.CURVE_LIKE, n_assets=n_assets, alpha=float(alpha), beta=float(beta))

    # -- derived properties ------------------------------------------------

    @property
    def homogeneity_degree(self) -> float | None:
        if self.family is Family.CURVE_LIKE:
            return None
        return 1.0

    @property
    def is_homogeneous(self) -> bool:
        return self.homogeneity_degree is not None

    @property
    def strictly_concave(self) -> bool:
        return self.family is not Family.CONSTANT_SUM

    @property
    def weight_array(self) -> np.ndarray:
        """Per-asset exponents of the (weighted) geometric mean."""
        cached = self.__dict__.get("_weight_array")
        if cached is not None:
            return cached
        if self.family is Family.CONSTANT_PRODUCT:
            w = np.full(self.n_assets, 1.0 / self.n_assets)
        elif self.family is Family.CONSTANT_MEAN:
            w = np.asarray(self.weights, dtype=float)
        else:
            raise UnsupportedFamilyError(
                f"weight_array is not defined for {self.family.value}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "_weight_array", w)
        return w

    def describe(self) -> str:
        if self.family is Family.CONSTANT_MEAN:
            return f"constant_mean(w={list(self.weights)})"
        if self.family is Family.CURVE_LIKE:
            return f"curve_like(alpha={self.alpha}, beta={self.beta}, n={self.n_assets})"
        return f"{self.family.value}(n={self.n_assets})"


def _check_domain(spec: TradingFunctionSpec, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (spec.n_assets,):
        raise ValidationError(
            f"reserves must have shape ({spec.n_assets},), got {r.shape}"
        )
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("reserves must be finite and strictly positive")
    return r


def eval_psi(spec: TradingFunctionSpec, reserves) -> float:
    """Evaluate the trading function at strictly positive reserves."""
    r = _check_domain(spec, reserves)
    fam = spec.family
    if fam in (Family.CONSTANT_PRODUCT, Family.CONSTANT_MEAN):
        w = spec.weight_array
        return float(np.exp(np.dot(w, np.log(r))))
    if fam is Family.CONSTANT_SUM:
        return float(math.fsum(r))
    # curve_like
    return float(spec.alpha * math.fsum(r) - spec.beta * math.fsum(1.0 / r))


def grad_psi(spec: TradingFunctionSpec, reserves) -> np.ndarray:
    """Analytic gradient of the trading function; strictly positive on R > 0."""
    r = _check_domain(spec, reserves)
    fam = spec.family
    if fam in (Family.CONSTANT_PRODUCT, Family.CONSTANT_MEAN):
        w = spec.weight_array
        return eval_psi(spec, r) * w / r
    if fam is Family.CONSTANT_SUM:
        return np.ones(spec.n_assets)
    return spec.alpha + spec.beta / (r * r)


def psi_diff(spec: TradingFunctionSpec, reserves, delta, *,
             psi_value: float | None = None, validate: bool = True) -> float:
    """psi(R + delta) - psi(R), computed without catastrophic cancellation.

    ``reserves`` must be strictly positive; ``R + delta`` may touch or cross
    the boundary, in which case the difference is reported as -inf (the
    geometric-mean and curve_like values collapse there, and any such point
    is on the infeasible side of every root we bracket).

    ``psi_value`` short-circuits the psi(R) evaluation when the caller
    already holds it; ``validate=False`` skips domain checks on reserves
    known positive (hot solver loops).
    """
    if validate:
        r = _check_domain(spec, reserves)
        d = np.asarray(delta, dtype=float)
        if d.shape != r.shape:
            raise ValidationError("trade vector length must match reserves")
    else:
        r = reserves
        d = delta
    shifted = r + d
    fam = spec.family
    if fam is Family.CONSTANT_SUM:
        if np.any(shifted < 0):
            return -math.inf
        return float(math.fsum(d))
    if np.any(shifted <= 0):
        return -math.inf
    if fam in (Family.CONSTANT_PRODUCT, Family.CONSTANT_MEAN):
        w = spec.weight_array
        log_ratio = float(np.dot(w, np.log1p(d / r)))
        if psi_value is None:
            psi_value = eval_psi(spec, r)
        return psi_value * float(math.expm1(log_ratio))
    # curve_like: alpha*sum(d) + beta*sum(d / (R*(R+d)))
    return float(
        spec.alpha * math.fsum(d) + spec.beta * math.fsum(d / (r * shifted))
    )


def tol_feas_value(psi_value: float) -> float:
    """Feasibility tolerance at a given trading-function value."""
    return 1e-9 * max(1.0, psi_value)


def tol_feas(spec: TradingFunctionSpec, reserves) -> float:
    """Feasibility tolerance: 1e-9 * max(1, psi(R)).

    The exact-arithmetic trade acceptance rule is an equality; floating
    point needs a relative band around it.
    """
    return tol_feas_value(eval_psi(spec, reserves))


# -- serialization ---------------------------------------------------------

def spec_to_dict(spec: TradingFunctionSpec) -> dict:
    out: dict = {"family": spec.family.value, "n_assets": spec.n_assets}
    if spec.weights is not None:
        out["weights"] = list(spec.weights)
    if spec.alpha is not None:
        out["alpha"] = spec.alpha
        out["beta"] = spec.beta
    return out


def spec_from_dict(data: dict) -> TradingFunctionSpec:
    try:
        family = Family(data["family"])
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"unknown trading-function family: {data.get('family')!r}") from exc
    weights = data.get("weights")
    return TradingFunctionSpec(
        family,
        n_assets=int(data.get("n_assets", len(weights) if weights else 2)),
        weights=tuple(weights) if weights is not None else None,
        alpha=data.get("alpha"),
        beta=data.get("beta"),
    )
