"""Exception hierarchy shared by all coarsedim modules."""


class CoarseDimError(Exception):
    """Base class for every error raised by this library."""


class InvalidArgumentError(CoarseDimError, ValueError):
    """An argument violates a documented precondition (bad scale, base, ...)."""


class PreconditionError(CoarseDimError):
    """A mathematical hypothesis required by an operation does not hold,
    so the operation's guarantee would be void (e.g. an extension weight
    below the diameter of the base group)."""


class NotGeneratedError(CoarseDimError):
    """The generating set does not reach the requested element."""

    def __init__(self, element, message=None):
        self.element = element
        super().__init__(message or f"element {element!r} is not generated")


class InvalidCoverError(CoarseDimError):
    """A purported cover misses a point, or has the wrong class count."""

    def __init__(self, point=None, message=None):
        self.point = point
        super().__init__(message or f"cover does not contain point {point!r}")


class InvalidScaleError(CoarseDimError, ValueError):
    """A scale falls outside every admissible scale window."""


class ResourceBudgetError(CoarseDimError):
    """An exhaustive computation would exceed the configured budget."""


class InsufficientChainError(CoarseDimError):
    """The supplied subgroup chain ran out before the requested number of
    construction rounds completed."""

    def __init__(self, rounds_completed, partial=None, message=None):
        self.rounds_completed = rounds_completed
        self.partial = partial
        super().__init__(
            message
            or f"chain exhausted after {rounds_completed} completed round(s)"
        )


class CertificationError(CoarseDimError):
    """A self-certifying construction failed its own exhaustive check.

    This signals a construction bug or an unattainable target ratio for the
    requested parameters; it is never silent."""


class OutOfRangeError(CoarseDimError):
    """A tabulated function was queried beyond its sampled range."""


class ConfigError(CoarseDimError):
    """An experiment configuration could not be parsed or validated."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        detail = message
        if line is not None:
            detail = f"line {line}: {detail}"
        if field is not None:
            detail = f"{detail} (field {field!r})"
        super().__init__(detail)
