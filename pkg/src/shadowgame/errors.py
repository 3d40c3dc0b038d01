"""Exception hierarchy shared by all modules."""


class ShadowGameError(Exception):
    pass


class InvalidInput(ShadowGameError, ValueError):
    pass


class SingularBasis(ShadowGameError):
    pass


class TooLarge(ShadowGameError):
    pass


class RetryExhausted(ShadowGameError):
    pass


class InvalidTable(ShadowGameError):
    pass


class NoSolution(ShadowGameError):
    """The LP is unbounded above (or has no vertex)."""


class IterationLimit(ShadowGameError):
    pass


class InfeasibleAtVertex(ShadowGameError):
    pass


class OptimumCutOff(ShadowGameError):
    pass


class ParseError(ShadowGameError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TooManyPaths(ShadowGameError):
    pass


class NoNewPaths(ShadowGameError):
    pass


class StaleState(ShadowGameError):
    """A persisted state does not match the game it is being applied to, or is corrupt."""
