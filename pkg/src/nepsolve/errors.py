"""Exception and warning types raised across the package."""


class NepError(Exception):
    """Base class for all solver errors."""


class NonFiniteEntries(NepError, ValueError):
    pass


class DimensionMismatch(NepError, ValueError):
    pass


class SingularMatrix(NepError, ArithmeticError):
    """A factorization met a pivot that is numerically zero.

    During probing this usually means a sampling point sits on an eigenvalue.
    """


class EmptySpectrum(NepError, ValueError):
    pass


class NoConvergence(NepError, ArithmeticError):
    pass


class DuplicatePoints(NepError, ValueError):
    pass


class WeightOverflow(NepError, OverflowError):
    pass


class PointCollision(NepError, ValueError):
    pass


class SingularPoint(NepError, ValueError):
    """Evaluation requested at a pole or branch point of a scalar function."""


class OrderTooHigh(NepError, ValueError):
    pass


class RankCollapse(NepError, ArithmeticError):
    pass


class InterpolationInaccurate(NepError, ArithmeticError):
    pass


class Stage1Empty(NepError, RuntimeError):
    pass


class UnknownFunctionFamily(NepError, ValueError):
    pass


class ZeroVector(NepError, ValueError):
    pass


class FormatError(NepError, ValueError):
    pass


class ParseError(NepError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValidationError(NepError, ValueError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(field if message is None else f"{field}: {message}")


class OracleMismatch(NepError, AssertionError):
    pass


class GapNotFound(UserWarning):
    """Largest singular-value ratio stayed below the acceptance threshold."""


class NearSingularWarning(UserWarning):
    pass
