"""Exception types shared across the package."""


class SourceSeekError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SourceSeekError, ValueError):
    pass


class InvalidConfigError(SourceSeekError, ValueError):
    pass


class NonIdentifiableError(SourceSeekError, ValueError):
    """The k-th and (k+1)-th largest rates are tied, so the top-k set is not unique."""


class SingularGeometryError(SourceSeekError, ValueError):
    """Sensitivity requested at zero emitter-sensor distance."""


class SingularSystemError(SourceSeekError, ArithmeticError):
    pass


class InvalidStateError(SourceSeekError, RuntimeError):
    pass
