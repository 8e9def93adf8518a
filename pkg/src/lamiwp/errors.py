"""Exception hierarchy.

Validation-type failures map to CLI exit code 2, resource limits to exit code 3.
"""


class LamiwpError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class ValidationError(LamiwpError):
    exit_code = 2


class ResourceLimitError(LamiwpError):
    exit_code = 3


class NumericDegeneracyError(ValidationError):
    pass


class InvalidGenusError(ValidationError):
    pass


class WordParseError(ValidationError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ReductionFailureError(ValidationError):
    pass


class NotARepresentationError(ValidationError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class DisconnectedCoverError(ValidationError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class LevelMismatchError(ValidationError):
    pass


class NotAutomorphicError(ValidationError):
    pass


class CodomainError(ValidationError):
    pass


class ParityError(ValidationError):
    pass


class OutOfDiskError(ValidationError):
    pass


class NearBoundaryError(ValidationError):
    pass


class NotAPeriodMatrixError(ValidationError):
    pass
