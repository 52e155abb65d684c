"""Exception hierarchy.

Errors that signal a bad request (configuration, preconditions) derive from
``LiespecError`` directly; errors produced by the numerics themselves derive
from ``NumericalError`` so the command line can map them to their own exit
code.
"""


class LiespecError(Exception):
    pass


class ConfigurationError(LiespecError, ValueError):
    pass


class ParameterError(LiespecError, ValueError):
    pass


class BandlimitError(LiespecError):
    """Requested representations exceed what the quadrature integrates exactly."""


class CoverageError(LiespecError, KeyError):
    pass


class GridSymmetryError(LiespecError):
    pass


class NumericalError(LiespecError):
    pass


class SingularPowerError(NumericalError):
    pass


class SingularResolventError(NumericalError):
    def __init__(self, message, dual=None, z=None):
        super().__init__(message)
        self.dual = dual
        self.z = z


class ResolventProximityError(NumericalError):
    pass


class UnsupportedExponentError(ParameterError):
    pass


class DegenerateError(NumericalError):
    pass


class UnfittableError(NumericalError):
    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class MagnitudeError(NumericalError):
    pass


class IllConditionedError(NumericalError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConvergenceError(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
