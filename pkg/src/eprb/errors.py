"""Exception types shared across the engine, the Monte Carlo layer and the CLI."""


class EprbError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EprbError, ValueError):
    """Inconsistent experiment setup: arity mismatch, bad spread spec, bad sweep."""


class DegenerateError(EprbError, ArithmeticError):
    """A computation has no meaningful value (zero-norm field, all-zero sweep)."""


class DomainError(EprbError, ValueError):
    """An argument lies outside the domain of a stochastic operation."""
