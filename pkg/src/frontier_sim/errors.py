"""Exception hierarchy shared by all solver modules."""


class FrontierSimError(Exception):
    """Base class for all toolkit errors."""


class NonConvergence(FrontierSimError):
    """An iterative eigenvalue solve exceeded its iteration cap."""


class InvalidInitialData(FrontierSimError):
    """The initial profile violates the admissibility conditions."""


class StabilityFailure(FrontierSimError):
    """A time step produced an out-of-bounds solution; retry with smaller dt."""


class BelowThreshold(FrontierSimError):
    """A steady-state solve was requested below its persistence threshold."""


class NewtonDivergence(FrontierSimError):
    """Newton iteration for a steady state failed to converge."""


class InsufficientData(FrontierSimError):
    """A time series is too short for the requested estimate."""


class BracketFailure(FrontierSimError):
    """A bisection could not establish a valid sign-change bracket."""


class SweepConsistencyError(FrontierSimError):
    """A parameter sweep contradicts a guaranteed verdict pattern."""


class ParseError(FrontierSimError):
    """A run-config file is syntactically malformed or names unknown keys."""


class ValidationError(FrontierSimError):
    """A run-config value violates a model constraint."""
