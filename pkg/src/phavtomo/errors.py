"""Exception types shared across the package.

The CLI maps these to exit codes: ``ValidationError`` -> 2,
``NumericalFailure`` -> 3.
"""


class ValidationError(ValueError):
    """Input data violates a schema or a type invariant."""


class NumericalFailure(ArithmeticError):
    """A computation produced an invalid value (non-positive density, negative variance, ...)."""


class TruncationError(NumericalFailure):
    """The truncated Fock space is too small for the requested state."""
