"""Exception types shared across the package."""


class PercolabError(Exception):
    """Base class for all library errors."""


class NotAdjacent(PercolabError):
    pass


class DimensionMismatch(PercolabError):
    pass


class Unreachable(PercolabError):
    pass


class CapTooSmall(PercolabError):
    pass


class EmptySet(PercolabError):
    pass


class NoApproximant(PercolabError):
    pass


class NotInCone(PercolabError):
    pass


class DegeneratePolytope(PercolabError):
    pass


class PreconditionFailed(PercolabError):
    pass


class NoRationalSplit(PercolabError):
    pass


class ConesOverlap(PercolabError):
    pass


class NoGridPath(PercolabError):
    pass


class DomainExceeded(PercolabError):
    pass


class ScaleMismatch(PercolabError):
    pass


class NoMargin(PercolabError):
    pass


class RayContained(PercolabError):
    pass


class NotNegative(PercolabError):
    pass


class NormMismatch(PercolabError):
    pass


class NoEvenPair(PercolabError):
    pass


class NotSPD(PercolabError):
    pass


class ParityMismatch(PercolabError):
    pass
