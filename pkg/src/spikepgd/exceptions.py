"""Exception types raised by spikepgd."""


class SpikePGDError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpikePGDError, ValueError):
    """Incompatible domains, operators or options."""


class MalformedParameterError(SpikePGDError, ValueError):
    """A flat parameter vector does not have length k(d+1)."""


class UndefinedValueError(SpikePGDError, ValueError):
    """A quantity is requested where it is not defined."""


class InfeasiblePackingError(SpikePGDError, RuntimeError):
    """Could not place the requested number of separated spikes."""


class SolverAbort(SpikePGDError, RuntimeError):
    """The descent hit a non-finite objective value.

    The partial trace is attached so callers can still save it.
    """

    def __init__(self, message, trace=None, theta=None):
        super().__init__(message)
        self.trace = trace
        self.theta = theta
