# operators/errors.py
"""
Exception types raised by the operator modules.

All of them subclass a builtin so callers that only catch ValueError /
RuntimeError keep working.
"""

from typing import Any, Optional


class SpecError(ValueError):
    """Malformed experiment spec or event DSL string."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class EnumerationCapError(ValueError):
    """A probability table would exceed the configured enumeration cap."""

    def __init__(self, size: int, cap: int, what: str = "region"):
        self.size = size
        self.cap = cap
        super().__init__(
            f"{what} has {size} variables, above the exact cap of {cap}; "
            f"use the sampler (operators.sampler) or raise --exact-cap"
        )


class ZeroProbabilityError(ValueError):
    """Conditioning on an event of probability zero."""


class DominanceError(ValueError):
    """An FKG coupling was requested for a pair without stochastic dominance."""


class MarkovPropertyError(RuntimeError):
    """A blocking-set Markov property needed by a coupling does not hold."""

    def __init__(self, message: str, witness: Any = None):
        self.witness = witness
        super().__init__(message)


class FillingError(ValueError):
    """The requested filling target is not admissible for the region."""
