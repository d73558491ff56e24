"""Exception types shared across the package."""


class AuxTrialError(Exception):
    """Base class for all package errors."""


class EmptyArm(AuxTrialError):
    """A subgroup has no patients in one of the arms."""


class BadStage(AuxTrialError):
    """Invalid interim-stage restriction (e.g. more primary outcomes than enrollments)."""


class NoValidRoot(AuxTrialError):
    """The joint-cell quadratic has no root in the feasible interval (internal assertion)."""


class EmptyPool(AuxTrialError):
    """Resampling pool contains no records."""


class DegenerateCovariance(AuxTrialError):
    """A summary covariance matrix is not positive semidefinite."""


class ScheduleTooFine(AuxTrialError):
    """Alpha-spending increment too small to define a finite boundary."""


class BoundsEmpty(AuxTrialError):
    """Optimization search region contains no candidates."""


class ConfigError(AuxTrialError):
    """Invalid experiment configuration; message carries the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
