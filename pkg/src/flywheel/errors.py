"""Exception hierarchy shared across the package.

Regime errors signal that the requested physics is outside the operating
window (no steady state, feedback without a signal, ...).  Guard errors
signal that the numerics cannot represent the requested physics (Fock
truncation too small, step too large, ...).  The CLI maps these families
to distinct exit codes.
"""


class FlywheelError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(FlywheelError):
    """Operands live on different spaces."""


class InvariantViolation(FlywheelError):
    """A state or operator failed its contract checks."""


# --- regime errors ---------------------------------------------------------

class InvalidFrequencies(FlywheelError):
    """Engine frequencies do not satisfy omega_h > omega_c > 0."""


class FeedbackWithoutMeasurement(FlywheelError):
    """kappa_f > 0 requires gamma_m > 0: feedback needs a signal."""


class BelowThreshold(FlywheelError):
    """Feedback strength at or below the stabilization threshold -kappa_e."""


class NoSteadyState(FlywheelError):
    """The composed generator has no (physical) stationary state."""


class UnstableNearThreshold(FlywheelError):
    """kappa_f + kappa_e cancels to within roundoff; result would be garbage."""


class InsufficientTrajectories(FlywheelError):
    """Too few trajectories for a meaningful ensemble estimate."""


# --- numerical guard errors ------------------------------------------------

class TruncationInsufficient(FlywheelError):
    """Requested state does not fit in the truncated Fock space."""


class DisplacementTooLargeForTruncation(FlywheelError):
    """|alpha|^2 too close to the truncation dimension."""


class TruncationBreached(FlywheelError):
    """Population reached the top Fock levels during evolution."""

    def __init__(self, message, time=None, population=None):
        super().__init__(message)
        self.time = time
        self.population = population


class StepTooLarge(FlywheelError):
    """Integration step exceeds the stability bound of the generator."""


class NonPositiveEigenvalueBeyondTolerance(FlywheelError):
    """A conditional state developed a negative eigenvalue beyond tolerance."""


class NegativeCoefficientPropagation(FlywheelError):
    """Attempted standalone propagation of a negative-rate dissipator."""


class ConfigError(FlywheelError):
    """Experiment configuration failed validation."""


REGIME_ERRORS = (
    InvalidFrequencies,
    FeedbackWithoutMeasurement,
    BelowThreshold,
    NoSteadyState,
    UnstableNearThreshold,
    InsufficientTrajectories,
)

GUARD_ERRORS = (
    TruncationInsufficient,
    DisplacementTooLargeForTruncation,
    TruncationBreached,
    StepTooLarge,
    NonPositiveEigenvalueBeyondTolerance,
    NegativeCoefficientPropagation,
)
