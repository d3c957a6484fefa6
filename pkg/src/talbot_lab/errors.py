"""Exception and warning types raised by talbot_lab."""


class TalbotLabError(Exception):
    """Base class for all library errors."""


class DomainError(TalbotLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(TalbotLabError, ValueError):
    """Inconsistent interferometer or run configuration."""


class AccuracyError(TalbotLabError, ArithmeticError):
    """A numerical routine failed to reach its accuracy contract."""


class DegenerateSignalError(TalbotLabError, ValueError):
    """Fringe signal with vanishing offset."""


class DegenerateParticleError(TalbotLabError, ValueError):
    """Particle parameters make a derived quantity undefined."""


class NonIdentifiableError(TalbotLabError, ValueError):
    """The data carry no information about the fitted parameters."""


class TruncationWarning(UserWarning):
    """A Fourier series was cut off while its tail was still significant."""


class BoundaryWarning(UserWarning):
    """An optimizer converged onto the edge of its search box."""
