"""Exception types shared across the package."""


class GlseGampError(Exception):
    """Base class for all package errors."""


class NonInvertible(GlseGampError):
    """A 2x2 block could not be inverted even after eigenvalue flooring."""


class InvalidConfig(GlseGampError):
    """Precoder or experiment configuration violates its invariants."""


class Divergence(GlseGampError):
    """GAMP iterates blew up; carries the iteration index and partial trace."""

    def __init__(self, message, iteration=None, trace=None):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace


class PoleAtOne(GlseGampError):
    """R-transform evaluated at its pole omega = 1."""


class NoSolution(GlseGampError):
    """Root bracketing for a tuning fixed point failed."""


class InfeasibleTargets(GlseGampError):
    """Requested (P, eta, P_max) combination admits no tuning solution."""


class NoConvergence(GlseGampError):
    """Fixed-point iteration did not converge within its iteration budget."""


class SupportViolation(GlseGampError):
    """A transmit vector lies outside the configured precoding support."""


class MaxIterations(GlseGampError):
    """Solver hit its iteration cap; carries the best iterate found."""

    def __init__(self, message, x=None, residual=None):
        super().__init__(message)
        self.x = x
        self.residual = residual
