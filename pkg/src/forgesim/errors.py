"""Exception types shared across the toolkit."""


class ForgesimError(Exception):
    """Base class for toolkit errors."""


class DomainError(ForgesimError, ValueError):
    """A parameter or input value lies outside its documented domain."""


class DegenerateDataError(ForgesimError, ValueError):
    """Input data cannot support the requested estimation (e.g. all-singleton histogram)."""


class AlignmentError(ForgesimError, ValueError):
    """Monthly series passed together do not cover the same months."""


class ConvergenceError(ForgesimError, RuntimeError):
    """An iterative procedure failed to converge within its iteration cap.

    Carries the best point reached so callers can inspect partial results.
    """

    def __init__(self, message: str, best: object = None):
        super().__init__(message)
        self.best = best
