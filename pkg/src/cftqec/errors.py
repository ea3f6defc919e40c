"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage problems exit 2, resource ceilings
exit 3, numerical failures exit 4.
"""


class CFTQECError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ArgumentError(CFTQECError, ValueError):
    exit_code = 2


class ConfigError(ArgumentError):
    """Malformed experiment or content configuration."""


class ContentError(ConfigError):
    """Operator-content table references something it does not declare."""


class ConstructionError(ArgumentError):
    """A value object could not be built from the supplied data."""


class DomainError(ArgumentError):
    """Argument outside the mathematical domain of a formula (e.g. Gamma poles)."""


class ResourceError(CFTQECError):
    exit_code = 3


class NumericalError(CFTQECError, ArithmeticError):
    exit_code = 4


class LabelingError(NumericalError):
    """Low-energy states cannot be matched to CFT scaling operators."""


class FitError(NumericalError):
    """A fit is underdetermined, ill-conditioned or has no admissible solution."""


class PredictionError(CFTQECError):
    exit_code = 4
