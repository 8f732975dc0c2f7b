"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class SFQMError(Exception):
    exit_code = 1


class InputError(SFQMError, ValueError):
    """Invalid parameters or malformed input data."""

    exit_code = 1


class InvariantError(SFQMError, ArithmeticError):
    """A numerical invariant (unitarity, reality of a Bloch phase, ...) was violated."""

    exit_code = 2


class ResourceLimitError(SFQMError):
    """Requested problem size exceeds a configured cap."""

    exit_code = 3
