"""Exception hierarchy shared by every module.

Each class carries the CLI exit code used when it escapes a command.
"""


class BoundaryQualityError(Exception):
    exit_code = 5


class FormatError(BoundaryQualityError, ValueError):
    """Malformed serialized data (RLE counts, compressed strings, binary files, JSON)."""

    exit_code = 3


class InputError(BoundaryQualityError, ValueError):
    """Arguments violate an operation's preconditions."""

    exit_code = 4


class StateError(BoundaryQualityError, RuntimeError):
    exit_code = 4


class GenerationError(BoundaryQualityError, RuntimeError):
    exit_code = 4
