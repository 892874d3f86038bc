"""Exception types shared across the package."""


class OseenLabError(Exception):
    """Base class for all package errors."""


class InputError(OseenLabError, ValueError):
    """A value is outside the domain of an operation."""


class DomainError(InputError):
    """A point or parameter lies where an operation is not defined."""


class ConfigurationError(OseenLabError, ValueError):
    """An experiment or grid is configured inconsistently."""


class HypothesisViolation(InputError):
    """The parameters violate the hypotheses an estimate needs."""


class WrapAroundError(OseenLabError):
    """A periodic field carries too much mass near the box boundary.

    Attributes
    ----------
    t : float
        Time at which the guard tripped.
    ratio : float
        Boundary-shell norm divided by total norm.
    max_safe_t : float or None
        Largest time the same configuration is expected to tolerate.
    """

    def __init__(self, t, ratio, max_safe_t=None):
        self.t = t
        self.ratio = ratio
        self.max_safe_t = max_safe_t
        msg = f"boundary mass ratio {ratio:.3e} at t={t:g}"
        if max_safe_t is not None:
            msg += f"; max safe t ~ {max_safe_t:.4g}"
        super().__init__(msg)


class EndpointDivergence(InputError):
    """A time-convolution exponent makes an endpoint non-integrable."""
