"""Exception hierarchy shared by all analysis modules."""


class BJJError(Exception):
    """Base class for every error raised by :mod:`bjjcavity`."""


class DomainError(BJJError, ValueError):
    """A state lies outside the phase space, ``|z| > 1``."""


class DegenerateCoupling(BJJError, ValueError):
    """``delta * U0 == 0``: the cavity decouples and the reduction unit vanishes."""


class PoleSingularity(BJJError, ValueError):
    """Evaluation requested within the pole guard of ``z = +-1``."""


class DegenerateRoot(BJJError):
    """A stationary point with ``|f'| < 1e-8``, i.e. (near) a fold bifurcation.

    The points found so far are attached as ``points`` so callers can still
    report them with a flag.
    """

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = list(points or [])


class EulerViolation(BJJError):
    """``m0 - m1 + m2 != 2`` for the stationary points found."""

    def __init__(self, message, points=None, counts=None):
        super().__init__(message)
        self.points = list(points or [])
        self.counts = counts


class PoleApproach(BJJError):
    """An accepted integration step came within the pole guard.

    ``trajectory`` holds the samples produced before the abort.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepLimitExceeded(BJJError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class InsufficientData(BJJError):
    """Too few mean-level crossings to estimate a period."""


class NotPeriodic(BJJError):
    """Cycle-to-cycle spread of the period estimate exceeds 1 %."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class Unclassified(BJJError):
    """Mode classification criteria disagree."""


class EmptyLevel(BJJError, ValueError):
    """Contour level outside the sampled energy range."""


class ConfigError(BJJError, ValueError):
    """Invalid or inconsistent run configuration."""
