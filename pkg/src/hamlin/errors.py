"""Exception types raised across the package."""


class HamlinError(Exception):
    """Base class for all package errors."""


class DimensionError(HamlinError, ValueError):
    pass


class HermiticityError(HamlinError, ValueError):
    pass


class BranchError(HamlinError, ValueError):
    pass


class FormError(HamlinError, ValueError):
    pass


class UnitarityError(HamlinError, ValueError):
    pass


class NotNilpotentError(HamlinError, ValueError):
    pass


class DomainError(HamlinError, ValueError):
    pass


class OrderError(HamlinError, ValueError):
    pass


class CostError(HamlinError, ValueError):
    pass


class SignError(HamlinError, ValueError):
    pass


class NormError(HamlinError, ValueError):
    pass


class EvalError(HamlinError, ValueError):
    pass


class ParityError(HamlinError, ValueError):
    pass


class CertError(HamlinError, RuntimeError):
    pass


class SingularError(HamlinError, ValueError):
    pass


class StateError(HamlinError, ValueError):
    pass


class NormalityError(HamlinError, ValueError):
    pass


class ConvergenceError(HamlinError, RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])
