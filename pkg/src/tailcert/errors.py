"""Exception hierarchy shared by every module."""


class TailcertError(Exception):
    pass


class DomainError(TailcertError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(TailcertError, ValueError):
    """A model/sampler combination that cannot be realized (e.g. singular covariance)."""


class SearchFailure(TailcertError, RuntimeError):
    pass


class NumericError(TailcertError, ArithmeticError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateParameters(NumericError):
    """The requested parameters make the bound vacuous."""


class UnboundedNu(NumericError):
    pass
