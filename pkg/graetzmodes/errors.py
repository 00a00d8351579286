"""
Exception hierarchy for graetzmodes.

Three categories map onto the command line exit codes:

- ConfigError (2): the problem definition is unusable
- ComputationError (3): a numerical step could not be carried out
- ValidationFailure (4): an independent cross-check disagreed
"""

from typing import List, Optional


class GraetzError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class ConfigError(GraetzError):
    """Invalid configuration file, domain or parameter."""

    exit_code = 2


class ComputationError(GraetzError):
    """A numerical operation failed or was requested outside its validity range."""

    exit_code = 3


class ValidationFailure(GraetzError):
    """An oracle cross-check exceeded its tolerance."""

    exit_code = 4


# Configuration and domain errors


class DomainValidationError(ConfigError):
    """Raised by domain validation; carries every violation found."""

    def __init__(self, violations: List[str]):
        # each violation reads "<Code>: <detail>"
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    @property
    def codes(self) -> List[str]:
        return [violation.split(':', 1)[0] for violation in self.violations]


class InvalidParameter(ConfigError):
    pass


class UnsupportedIndex(ConfigError):
    pass


# Algebra and closure errors


class DivergentIntegral(ComputationError):
    pass


class EvaluationAtSingularity(ComputationError):
    pass


class SingularInterfaceSystem(ComputationError):
    pass


class InexactLogarithm(ComputationError):
    """Exact arithmetic met the logarithm of a value other than 1."""

    def __init__(self, value, message: Optional[str] = None):
        self.value = value
        super().__init__(message or f"ln({value}) is not rational")


# Spectrum errors


class TrustRadiusTooSmall(ComputationError):
    pass


class NoConvergence(ComputationError):
    pass


# Field errors


class NotEquilibrated(ComputationError):
    pass


class ZeroDenominator(ComputationError):
    pass


class FamilyMismatch(ComputationError):
    pass


class DivergentConvolution(ComputationError):
    pass


class OutOfDomain(ComputationError):
    pass


# Oracle errors


class StepFailure(ComputationError):
    pass


class QuadratureFailure(ComputationError):
    pass
