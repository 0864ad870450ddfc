"""Exception hierarchy.

Every error raised by the library derives from :class:`TwoFoldError`.  The
CLI maps :class:`ConfigError` to exit code 2 and every other subclass to
exit code 3.
"""

from __future__ import annotations


class TwoFoldError(Exception):
    """Base class for all library errors."""


class ConfigError(TwoFoldError):
    """Malformed configuration file or invalid option combination."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelError(TwoFoldError):
    """The polynomial fields do not define a valid two-fold normal form."""


class DegenerateModel(ModelError):
    pass


class NotNormalized(ModelError):
    pass


class WrongClass(TwoFoldError):
    pass


class NotSliding(TwoFoldError):
    pass


class NoPseudoEquilibrium(TwoFoldError):
    pass


class NoCycle(TwoFoldError):
    pass


class OrderUnavailable(TwoFoldError):
    pass


class OutOfDomain(TwoFoldError):
    pass


class InvalidRegularization(TwoFoldError):
    pass


class NoEquilibrium(TwoFoldError):
    pass


class NewtonDiverged(TwoFoldError):
    pass


class NoHopf(TwoFoldError):
    pass


class InsufficientSmoothness(TwoFoldError):
    pass


class NoCanard(TwoFoldError):
    pass


class SingularDenominator(TwoFoldError):
    pass


class OpenLevelSet(TwoFoldError):
    pass


class CanardObstruction(TwoFoldError):
    pass


class IntegrationError(TwoFoldError):
    pass


class StepUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class ForwardNonUnique(TwoFoldError):
    """Filippov forward evolution is not unique from the reached state.

    The partial trajectory computed up to that point is attached as
    ``trajectory``.
    """

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DomainViolation(TwoFoldError):
    pass


class FoldCapture(TwoFoldError):
    pass


class BlowupEscape(TwoFoldError):
    pass


class SeedDiverged(TwoFoldError):
    pass


class StepFailure(TwoFoldError):
    pass


class BranchEscape(TwoFoldError):
    pass


class MonodromyIllConditioned(TwoFoldError):
    pass


class NoFold(TwoFoldError):
    pass


class NoExplosion(TwoFoldError):
    pass
