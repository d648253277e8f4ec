"""Exception types shared across the solver suite."""


class DivbarError(Exception):
    """Base class for all solver errors."""


class DomainError(DivbarError, ValueError):
    """An argument is outside the mathematical domain of the function."""


class KernelOverflowError(DivbarError, OverflowError):
    """An exponential moment exceeds the representable floating-point range."""


class TrivialProblemError(DivbarError):
    """mu <= 0: the value function is V(t, x) = x and no solve is needed."""


class NoBracketError(DivbarError):
    """The scalar root of the integral equation cannot be bracketed.

    Usually signals a misconfigured upper search bound.
    """


class NonMonotoneError(DivbarError):
    """A solved boundary value violates time-monotonicity beyond tolerance."""


class NonMonotoneBeyondCellError(DivbarError):
    """Extracted boundary is non-monotone by more than one space cell."""


class PsorDivergedError(DivbarError):
    """Projected SOR refinement hit its iteration cap before converging."""


class XmaxTooSmallError(DivbarError):
    """The continuation region touches the space-grid truncation level."""


class GridMismatchError(DivbarError):
    """Two grid-sampled objects do not share the same grid."""


class ConfigError(DivbarError, ValueError):
    """A run configuration file is malformed or inconsistent."""


class MissingArtifactError(DivbarError):
    """A prerequisite output file (e.g. a boundary CSV) is missing."""
