"""Exception hierarchy.

Errors split into two families so the CLI can map them to exit codes:
:class:`InputError` (bad data, bad parameters, exit 2) and
:class:`NumericError` (a computation that could not complete, exit 3).
"""


class TwpaError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class InputError(TwpaError, ValueError):
    exit_code = 2


class NumericError(TwpaError, ArithmeticError):
    exit_code = 3


# numerics
class DegenerateFit(NumericError):
    pass


class NonConvergence(NumericError):
    """Raised when an iterative fit hits its iteration cap.

    The best parameters found so far are attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SingularJacobian(NumericError):
    pass


class NonFiniteDerivative(NumericError):
    pass


class EmptyList(InputError):
    pass


class NonPositiveInput(InputError):
    pass


# line
class GapFrequency(InputError):
    pass


# nonlinear
class NonPositiveScalingCurrent(NonPositiveInput):
    pass


class NegativeSlope(NumericError):
    pass


class PumpInGap(InputError):
    def __init__(self, message, gaps=()):
        super().__init__(message)
        self.gaps = list(gaps)


class AmplitudeOverflow(NumericError):
    pass


class GridMismatch(InputError):
    pass


class ZeroReference(NumericError):
    pass


# noise
class InvalidChain(InputError):
    pass


class NonPositiveFrequency(NonPositiveInput):
    pass


# io / cli
class SchemaError(InputError):
    def __init__(self, message, path=None, row=None, column=None):
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{': '.join([', '.join(where), message])}"
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column


class ConfigError(InputError):
    pass


class MissingArtifacts(InputError):
    pass
