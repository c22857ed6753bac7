"""Exception hierarchy. The CLI maps these onto exit codes."""


class CascadeError(Exception):
    """Base class for all errors raised by cascade_lab."""

    exit_code = 3


class ConfigurationError(CascadeError, ValueError):
    """Invalid parameters or precondition violations in the inputs."""

    exit_code = 2


class DomainError(ConfigurationError):
    """An interval or point lies outside [0, pi]."""


class EllipticityError(ConfigurationError):
    """The diffusion coefficient is not bounded away from zero."""


class NumericalError(CascadeError, ArithmeticError):
    """A numerical procedure failed or produced unusable output."""


class ConditioningError(NumericalError):
    pass


class NotApproximatelyControllable(NumericalError):
    """Some moment norm vanishes, so the minimal control time is undefined."""


class HorizonTooShort(ConfigurationError):
    pass
