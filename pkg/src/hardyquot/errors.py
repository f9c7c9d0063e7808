"""Exception hierarchy shared by every module."""


class HardyQuotError(Exception):
    """Base class for all errors raised by this package."""


class PointOnBoundary(HardyQuotError, ValueError):
    pass


class GridMismatch(HardyQuotError, ValueError):
    pass


class GridTooSmall(HardyQuotError, ValueError):
    pass


class DimensionMismatch(HardyQuotError, ValueError):
    pass


class DimensionOverflow(HardyQuotError, ValueError):
    pass


class VariableCountMismatch(HardyQuotError, ValueError):
    pass


class DegenerateSpec(HardyQuotError, ValueError):
    pass


class SpecViolation(HardyQuotError, ValueError):
    pass


class SymbolIndependentOfVariable(HardyQuotError, ValueError):
    pass


class PreconditionError(HardyQuotError, ValueError):
    """An operation was called outside the regime where its closed form holds."""


class NotHomogeneous(HardyQuotError, ValueError):
    pass


class ZeroPolynomial(HardyQuotError, ValueError):
    pass


class IllConditioned(HardyQuotError, ValueError):
    pass


class NotApplicable(HardyQuotError, ValueError):
    pass


class ExcludedForm(HardyQuotError, ValueError):
    pass


class NotEssentiallyNormal(HardyQuotError, ValueError):
    pass


class UnimodularAlpha(HardyQuotError, ValueError):
    pass


class TruncationInconclusive(HardyQuotError, RuntimeError):
    pass


class CriticalValue(HardyQuotError, ValueError):
    pass


class RootfindingFailure(HardyQuotError, RuntimeError):
    pass


class ConfigInvalid(HardyQuotError, ValueError):
    pass


class ParseError(ConfigInvalid):
    def __init__(self, message, text=None, position=None):
        self.text = text
        self.position = position
        if text is not None and position is not None:
            message = f"{message} at position {position}: {text!r}\n  {' ' * (position + 1)}^"
        super().__init__(message)
