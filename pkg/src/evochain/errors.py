"""Exception types shared across the package."""

from __future__ import annotations


class EvochainError(Exception):
    """Base class for package-specific errors."""


class ExpressionSyntaxError(EvochainError, ValueError):
    """Raised when an expression string cannot be parsed.

    Carries the character offset of the offending token so callers can point
    at the exact spot in the source.
    """

    def __init__(self, message: str, pos: int, source: str):
        self.pos = pos
        self.source = source
        super().__init__(f"{message} at position {pos} in {source!r}")


class DomainError(EvochainError, ValueError):
    """Evaluation was attempted outside the mathematical domain."""


class EvalDomainError(DomainError):
    """Domain failure inside a scalar expression (log of a negative, 1/0, ...)."""

    def __init__(self, message: str, pos: int = -1, source: str = ""):
        self.pos = pos
        self.source = source
        if pos >= 0 and source:
            message = f"{message} at position {pos} in {source!r}"
        super().__init__(message)


class ChainDomainError(DomainError):
    """A chain was evaluated at a time pair outside its declared domain."""


class DimensionError(EvochainError, ValueError):
    """Operands have incompatible dimensions."""


class NotTriangularError(EvochainError, ValueError):
    """An operation that needs an upper-triangular structural matrix got something else."""


class SymmetryError(EvochainError, ValueError):
    """A symmetric family's entries failed the symmetry check.

    ``witness`` holds ``(i, k, s, t)`` for the worst pair, indices 1-based.
    """

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class ClassificationMismatchError(EvochainError):
    """The closed-form idempotent classification disagreed with the cascade solver."""


class ConfigError(EvochainError, ValueError):
    """A configuration document is malformed; ``key_path`` names the offending key."""

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        if key_path:
            message = f"{message} (at {key_path})"
        super().__init__(message)
