"""Exception hierarchy.

Each class carries the process exit code the command-line front end maps it to.
"""


class BarronGroundError(Exception):
    exit_code = 1


class InvalidInputError(BarronGroundError, ValueError):
    """Malformed arguments, dimension mismatches, schema violations."""

    exit_code = 2


class AssumptionViolation(BarronGroundError):
    """The potential is not bounded below by a positive constant."""

    exit_code = 3


class NumericError(BarronGroundError, ArithmeticError):
    exit_code = 4


class ResourceError(NumericError):
    """A discretization would exceed the configured size cap."""


class DegenerateSpectrumError(NumericError):
    pass


class DegenerateTrialError(NumericError):
    """A trial function vanishes on the samples (zero denominator)."""


class ConvergenceError(NumericError):
    pass
