"""Exception types shared across the package.

The CLI maps these onto exit codes: parse errors 2, numerical failures 3,
capability errors 4.
"""


class OctovalError(Exception):
    """Base class."""


class DomainError(OctovalError, ValueError):
    """Input outside an operation's mathematical domain."""


class PreconditionError(OctovalError, ValueError):
    """A documented precondition of an operation does not hold."""


class NumericalFailure(OctovalError, ArithmeticError):
    """A numerical procedure could not reach its accuracy guarantee."""


class CapabilityError(OctovalError, NotImplementedError):
    """The requested (variant, parameter) combination is not supported."""


class ParseError(OctovalError, ValueError):
    """Malformed field expression or body file."""
