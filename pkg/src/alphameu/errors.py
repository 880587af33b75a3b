"""Exception hierarchy.

Three branches mirror the CLI exit codes: validation failures (exit 2),
numerical failures (exit 3), and input-data failures (exit 4).
"""


class AlphaMeuError(Exception):
    """Base class for all package errors."""


class ValidationError(AlphaMeuError):
    """A model assumption or configuration contract is violated."""


class ConfigError(ValidationError):
    """Malformed or out-of-domain configuration values."""


class NonpositivePropensity(ValidationError):
    """A consumption propensity came out non-positive.

    Carries the offending value in ``.value``.
    """

    def __init__(self, value: float, label: str = "delta"):
        self.value = float(value)
        self.label = label
        super().__init__(f"{label} = {value:.6g} must be positive")


class ConditionViolated(ValidationError):
    """The drift-dominance condition for solvability fails.

    ``lhs`` is min(delta_plus, delta_minus); ``rhs`` the larger of the two
    derivative suprema it must exceed.
    """

    def __init__(self, lhs: float, rhs: float):
        self.lhs = float(lhs)
        self.rhs = float(rhs)
        super().__init__(
            f"min consumption propensity {lhs:.6g} does not exceed "
            f"drift-derivative bound {rhs:.6g}"
        )


class NumericalError(AlphaMeuError):
    """A numerical routine could not produce a trustworthy result."""


class SingularSystem(NumericalError):
    """The discretized linear system could not be solved."""


class ResidualTooLarge(NumericalError):
    """A post-solve consistency check exceeded its tolerance."""


class OutOfRange(NumericalError):
    """Evaluation point lies outside the grid hull."""


class DomainError(NumericalError):
    """Argument outside the mathematical domain of a closed form."""


class TruncationTooLarge(NumericalError):
    """Monte-Carlo horizon too short for the requested bias bound."""


class NormalizationFailure(NumericalError):
    """A density could not be normalized to unit mass."""


class GridMismatch(NumericalError):
    """Two grid-sampled objects do not share the same grid."""


class OptimizerDiverged(NumericalError):
    """All optimizer restarts failed to produce a finite optimum."""


class NoRoot(NumericalError):
    """Root finding failed; carries bracket diagnostics in ``.diagnostics``."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class UnknownFigure(ValidationError):
    """Unrecognized figure identifier."""


class DataError(AlphaMeuError):
    """Problems in user-supplied input data."""


class ParseError(DataError):
    """Input file is malformed."""


class GapError(DataError):
    """Annual series has missing years."""


class NonpositiveError(DataError):
    """A series value that must be positive is not."""


class InsufficientData(DataError):
    """Too few observations for the requested estimator."""
