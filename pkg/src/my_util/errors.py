"""Exceptions shared by every package; the CLI maps them to exit codes."""


class ShapeError(ValueError):
    """Operand extents do not fit the operation."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(FloatingPointError):
    """A forward op produced NaN or Inf from finite inputs."""


class UsageError(RuntimeError):
    """The API was called in a state or with arguments it does not accept."""


class ConfigurationError(RuntimeError):
    """A run configuration can never make progress."""


class DataFormatError(ValueError):
    def __init__(self, message: str, offset: int | None = None, missing: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        if missing is not None:
            message = f"{message}; {missing} bytes missing"
        super().__init__(message)
        self.offset = offset
        self.missing = missing
