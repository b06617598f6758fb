"""Exception hierarchy shared by every module of the package."""


class PrecodingError(Exception):
    """Base class for all errors raised by precodekit."""


class NotPositiveDefinite(PrecodingError):
    pass


class RankDeficient(PrecodingError):
    pass


class ShapeError(PrecodingError, ValueError):
    pass


class ZeroChannel(PrecodingError):
    pass


class UnknownScenario(PrecodingError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownStrategy(PrecodingError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class Infeasible(PrecodingError):
    pass


class NotConverged(PrecodingError):
    """Raised when an iterative method exhausts its budget.

    The best iterate found so far is attached as ``outcome`` so callers can
    still inspect it.
    """

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class DegenerateNullspace(PrecodingError):
    pass


class TooLarge(PrecodingError):
    pass


class ArchitectureMismatch(PrecodingError):
    pass


class NoApplicableStrategy(PrecodingError):
    pass


class NoFurtherRefinement(PrecodingError):
    pass


class BackendFailure(PrecodingError):
    pass


class SchemaViolation(PrecodingError):
    pass


class Timeout(BackendFailure):
    pass


class HttpError(BackendFailure):
    pass


class ConfigError(PrecodingError):
    pass


class CorruptTranscript(PrecodingError):
    pass
