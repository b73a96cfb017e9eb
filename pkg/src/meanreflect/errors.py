"""Semantic exception hierarchy for the library.

Public functions raise these instead of bare ValueError so callers (and the
CLI's exit-code mapping) can tell configuration problems apart from solver
failures.
"""


class MeanReflectError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(MeanReflectError, ValueError):
    """An input violates a documented contract (domain, shape, invariant)."""


class LatticeSizeError(InvalidParameterError):
    """Requested lattice exceeds the enumeration cap."""


class DepthMismatchError(InvalidParameterError):
    """A functional's depth is incompatible with the lattice or operation."""


class IndicatorError(InvalidParameterError):
    """Capacity requested for a functional that is not {0,1}-valued."""


class StabilityError(InvalidParameterError):
    """Explicit PDE step size violates the monotonicity bound."""


class BracketError(MeanReflectError):
    """A root bracket could not be established.

    Signals that a declared bi-Lipschitz constant is violated by the actual
    loss function, since brackets are derived from those constants.
    """


class InitialConstraintError(InvalidParameterError):
    """The mean constraint fails at the initial time."""


class GridMismatchError(InvalidParameterError):
    """Two objects that must share a grid or lattice do not."""


class ValidationError(MeanReflectError):
    """A declared constant failed its spot check."""


class SolverError(MeanReflectError):
    """The fixed-point solver could not converge."""


class NonContractionError(SolverError):
    """Observed iteration ratio stayed above the guard at the minimum
    subinterval length."""


class ConfigError(MeanReflectError):
    """Experiment configuration is malformed or inconsistent."""
