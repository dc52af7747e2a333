"""Exception types shared across the package."""


class AsianLDError(Exception):
    """Base class for all package errors."""


class DomainError(AsianLDError, ValueError):
    """Input lies outside the domain of the requested quantity."""


class ConvergenceError(AsianLDError, RuntimeError):
    """An iterative solver did not converge."""


class RegimeError(AsianLDError, ValueError):
    """An asymptotic formula was requested outside its moneyness regime."""
