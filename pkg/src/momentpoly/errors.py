"""Exception hierarchy shared by all modules."""


class MomentPolyError(Exception):
    """Base class for library errors."""


class InvalidArgument(MomentPolyError, ValueError):
    pass


class ResourceLimit(MomentPolyError):
    """A combinatorial enumeration would exceed its configured bound."""


class NumericFailure(MomentPolyError, ArithmeticError):
    """An iterative numerical procedure failed to converge.

    ``residual`` carries the last residual when available.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class StageFailure(MomentPolyError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
