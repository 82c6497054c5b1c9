"""Exception hierarchy shared across the package.

Everything derives from PlastlimError so callers can catch package errors
wholesale; the CLI maps subclasses to exit codes (config/model errors -> 1,
solver non-convergence -> 2).
"""


class PlastlimError(Exception):
    """Base class for all package errors."""


class ArgumentError(PlastlimError, ValueError):
    """A caller passed an argument outside an operation's documented domain."""


class DomainError(PlastlimError, ValueError):
    """Input lies outside the mathematical domain of a kernel (e.g. a matrix
    logarithm requested too far from the identity)."""


class InvariantError(PlastlimError, ValueError):
    """A structural invariant of an input object is violated (e.g. a plastic
    strain that is not symmetric trace-free within tolerance)."""


class ViolationError(PlastlimError, RuntimeError):
    """A sampled model assumption failed; carries the offending sample."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class SamplingError(PlastlimError, RuntimeError):
    """A sampling-based search could not find any admissible value."""


class NonConvergence(PlastlimError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class BarrierError(PlastlimError, RuntimeError):
    """A line search could not keep the iterate inside the finite-energy
    region (orientation preservation / plastic-strain ball)."""


class DegenerateFit(PlastlimError, ValueError):
    """A log-log order fit was requested on data containing exact zeros
    (reported as exact convergence)."""


class GridMismatch(PlastlimError, ValueError):
    """Two trajectories do not share the same time grid or mesh."""


class ParseError(PlastlimError, ValueError):
    """A config file could not be parsed; message carries line/key info."""


class ValidationError(PlastlimError, ValueError):
    """A parsed config violates invariants; message lists every violation."""
