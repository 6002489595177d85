"""cfmmprobe: CFMM simulation and adversary toolkit.

Constant function market makers leak their reserves: one marginal-price
query plus one feasible trade pin them down exactly, and reserves before
and after a hidden trade reveal the trade itself. This package implements
the pool families, the reconstruction attacks, the geometric checks that
make the attacks sound, and the two classic mitigations (per-block price
noise, order batching) with a seeded Monte-Carlo harness to score them.
"""

from .adversary import (
    estimate_price_from_trades,
    recover_reserves_from_oracle,
    recover_trade,
)
from .attack import (
    RecoveryResult,
    price_consistent_point,
    recover_reserves,
    recover_reserves_constant_sum,
    recover_reserves_cp_closed_form,
    solve_scale,
)
from .errors import (
    BracketError,
    CfmmProbeError,
    ConvergenceError,
    DegenerateProbesError,
    DomainError,
    InfeasibleLPError,
    NoSolutionError,
    ProbeError,
    SingularSystemError,
    SolverError,
    TradeRejectedError,
    UnsupportedFamilyError,
    ValidationError,
)
from .families import (
    Family,
    TradingFunctionSpec,
    eval_psi,
    grad_psi,
    psi_diff,
    spec_from_dict,
    spec_to_dict,
    tol_feas,
)
from .geometry import (
    GeometryProperty,
    GeometryReport,
    default_scale_grid,
    scan_scale_sign,
    verify_ray_invariance,
)
from .harness import (
    AliceConfig,
    EveConfig,
    ExperimentReport,
    ScenarioConfig,
    TrialReport,
    load_config,
    run_experiment,
    run_trial,
    save_config,
)
from .mitigations import (
    BatchConfig,
    NoiseConfig,
    NoisyPoolOracle,
    PrivacyReport,
    batch_execute,
    evaluate_mitigation,
    noisy_price_oracle,
)
from .oracle import CfmmOracle, PoolOracle
from .pool import (
    PoolState,
    PriceVector,
    Trade,
    execute_trade,
    fee_adjusted,
    is_feasible,
    marginal_price,
    quote_input,
    quote_output,
)
from .probes import attack_probe, centered_probe, coarse_price

__version__ = "0.1.0"

__all__ = [
    "AliceConfig",
    "BatchConfig",
    "BracketError",
    "CfmmOracle",
    "CfmmProbeError",
    "ConvergenceError",
    "DegenerateProbesError",
    "DomainError",
    "EveConfig",
    "ExperimentReport",
    "Family",
    "GeometryProperty",
    "GeometryReport",
    "InfeasibleLPError",
    "NoSolutionError",
    "NoiseConfig",
    "NoisyPoolOracle",
    "PoolOracle",
    "PoolState",
    "PriceVector",
    "PrivacyReport",
    "ProbeError",
    "RecoveryResult",
    "ScenarioConfig",
    "SingularSystemError",
    "SolverError",
    "Trade",
    "TradeRejectedError",
    "TradingFunctionSpec",
    "TrialReport",
    "UnsupportedFamilyError",
    "ValidationError",
    "attack_probe",
    "batch_execute",
    "centered_probe",
    "coarse_price",
    "default_scale_grid",
    "estimate_price_from_trades",
    "eval_psi",
    "evaluate_mitigation",
    "execute_trade",
    "fee_adjusted",
    "grad_psi",
    "is_feasible",
    "load_config",
    "marginal_price",
    "noisy_price_oracle",
    "price_consistent_point",
    "psi_diff",
    "quote_input",
    "quote_output",
    "recover_reserves",
    "recover_reserves_constant_sum",
    "recover_reserves_cp_closed_form",
    "recover_reserves_from_oracle",
    "recover_trade",
    "run_experiment",
    "run_trial",
    "save_config",
    "scan_scale_sign",
    "solve_scale",
    "spec_from_dict",
    "spec_to_dict",
    "tol_feas",
    "verify_ray_invariance",
]
