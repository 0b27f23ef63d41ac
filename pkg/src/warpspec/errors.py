"""Exception types shared across the package."""


class WarpspecError(Exception):
    pass


class DomainError(WarpspecError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class InfeasibleError(WarpspecError):
    """No truncation length satisfies the requested spectral window."""


class ConvergenceError(WarpspecError, RuntimeError):
    """A numerical method failed to reach its tolerance."""
