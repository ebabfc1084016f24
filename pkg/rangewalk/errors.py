"""
Exception types raised by rangewalk.

All library errors derive from RangewalkError so callers can catch the whole
family; the ones that signal a bad argument also derive from ValueError.
"""


class RangewalkError(Exception):
    """Base class for all rangewalk errors."""
    pass


class DomainError(RangewalkError, ValueError):
    """Argument outside the documented domain of an operation."""
    pass


class ResourceBudgetError(RangewalkError):
    """A configured cost, memory or coordinate-box budget would be exceeded."""
    pass


class ConvergenceError(RangewalkError):
    """Quadrature or dyadic refinement did not converge."""
    pass


class CenteringError(RangewalkError, KeyError):
    """A centering table required by an estimator is missing."""
    pass


class ScaleMismatchError(RangewalkError, ValueError):
    """Ensembles built with incompatible (n, depth, regime) were combined."""
    pass


class ConfigError(RangewalkError, ValueError):
    """Malformed experiment configuration or unknown tolerance profile."""
    pass


class SampleSizeError(RangewalkError, ValueError):
    """Too few samples, paths or grid points for a statistical routine."""
    pass
