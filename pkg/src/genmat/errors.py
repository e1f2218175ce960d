"""Exception types raised across the package."""


class GenMatError(ValueError):
    """Base class for every error raised by genmat."""


class TreeError(GenMatError):
    pass


class CycleDetected(TreeError):
    pass


class MultipleRoots(TreeError):
    pass


class OrphanNode(TreeError):
    pass


class KTooLarge(GenMatError):
    pass


class DimensionMismatch(GenMatError):
    pass


class ZeroWeight(GenMatError):
    pass


class NonPositiveWeight(GenMatError):
    pass


class EigenvectorNotGuaranteed(GenMatError):
    pass


class SizeCapExceeded(GenMatError):
    pass


class ZeroPivotColumn(GenMatError):
    pass


class RankDeficient(GenMatError):
    pass


class NonPositiveEpsilon(GenMatError):
    pass


class QTooLarge(GenMatError):
    pass


class InvalidParam(GenMatError):
    pass


class ParseError(GenMatError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InconsistentLeafSet(GenMatError):
    pass
