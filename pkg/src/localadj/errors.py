"""Exception hierarchy shared by every module of the package."""


class LocalAdjError(Exception):
    """Base class for all errors raised by localadj."""


class InvalidMatrix(LocalAdjError, ValueError):
    pass


class NotHermitian(LocalAdjError, ValueError):
    pass


class InvalidLevel(LocalAdjError, ValueError):
    pass


class NumericalFailure(LocalAdjError, RuntimeError):
    """An iterative kernel failed to converge."""


class AlgebraMismatch(LocalAdjError, ValueError):
    pass


class ModuleInvalid(LocalAdjError, ValueError):
    """A Hilbert module or correspondence violates one of its axioms."""


class NotAdjointable(LocalAdjError, ValueError):
    pass


class NotLinear(LocalAdjError, ValueError):
    pass


class CandidateInvalid(LocalAdjError, ValueError):
    pass


class SingularPhi(LocalAdjError, ValueError):
    pass


class InfiniteIndex(LocalAdjError, ValueError):
    pass


class NoLocalAdjoint(LocalAdjError, ValueError):
    pass


class InvalidAction(LocalAdjError, ValueError):
    pass


class InvalidWeights(LocalAdjError, ValueError):
    pass


class DegenerateRepresentation(LocalAdjError, ValueError):
    pass


class ParseError(LocalAdjError, ValueError):
    """Problem document is malformed; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class UnresolvedReference(ParseError):
    pass
