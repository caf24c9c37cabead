"""Exception hierarchy shared by all modules."""


class KakeyaLabError(Exception):
    """Base class for library errors."""


class InvalidArgument(KakeyaLabError, ValueError):
    pass


class ResolutionTooCoarse(KakeyaLabError, ValueError):
    pass


class DomainTooSmall(KakeyaLabError, ValueError):
    pass


class BandExceeded(KakeyaLabError, ValueError):
    pass


class ConstructionFailed(KakeyaLabError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AccuracyFailure(KakeyaLabError, RuntimeError):
    pass


class SingularityError(KakeyaLabError, ValueError):
    pass


class ConstraintViolation(KakeyaLabError):
    """A hard geometric constraint failed; ``pairs`` lists offending index pairs."""

    def __init__(self, message, pairs=()):
        super().__init__(message)
        self.pairs = [tuple(int(i) for i in p) for p in pairs]
