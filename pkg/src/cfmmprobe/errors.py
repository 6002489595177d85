"""Exception hierarchy for cfmmprobe.

Validation-type errors signal bad inputs or unsupported configurations;
SolverError and its subclasses signal numerical failures (no bracket, no
convergence, degenerate systems). The CLI maps the former to exit code 1
and the latter to exit code 2.
"""


class CfmmProbeError(Exception):
    """Base class for all cfmmprobe errors."""


class ValidationError(CfmmProbeError, ValueError):
    """Invalid parameters, configuration, or preconditions."""


class DomainError(ValidationError):
    """Evaluation point outside the trading function's domain (R > 0)."""


class UnsupportedFamilyError(ValidationError):
    """Operation not applicable to this trading-function family."""


class TradeRejectedError(CfmmProbeError):
    """Trade failed the feasibility check; pool state is unchanged."""


class NoSolutionError(CfmmProbeError):
    """A quote has no solution (e.g. requested output exceeds reserves)."""


class SolverError(CfmmProbeError):
    """Base class for numerical solver failures."""


class SingularSystemError(SolverError):
    """Linear system for reserve recovery is singular."""


class BracketError(SolverError):
    """Root bracketing failed within the allowed search range."""


class ConvergenceError(SolverError):
    """Iterative solver did not reach the required residual."""


class ProbeError(SolverError):
    """Could not construct a feasible probe trade through the oracle."""


class DegenerateProbesError(SolverError):
    """Probe trades are linearly dependent; price system is degenerate."""


class InfeasibleLPError(SolverError):
    """The price-recovery linear program has no feasible point."""
