"""Exception hierarchy shared by the whole package.

The CLI maps these categories onto exit codes: validation errors exit 1,
feasibility violations exit 2, numerical failures exit 3.
"""


class EhRelayError(Exception):
    """Base class for all package errors."""


class ValidationError(EhRelayError, ValueError):
    """Malformed input: bad probabilities, shapes, or parameter domains."""


class BudgetError(ValidationError):
    """A requested experiment exceeds the hard desk-scale caps."""


class ConstraintError(EhRelayError):
    """Inputs are well formed but violate a feasibility condition."""


class NumericalError(EhRelayError, ArithmeticError):
    """A numerical procedure failed (no steady state, horizon too small, ...)."""
