"""Exception hierarchy shared by all modules."""


class SignedBipartiteError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SignedBipartiteError, ValueError):
    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DuplicateEdgeError(ParseError):
    pass


class DomainError(SignedBipartiteError, ValueError):
    """An argument lies outside the valid domain (index, sign, probability, ...)."""


class SplitError(SignedBipartiteError, ValueError):
    pass


class DegenerateNullError(SignedBipartiteError, ValueError):
    """Surprise is undefined because the null expectation is 0 or 1."""


class DegenerateLabelsError(SignedBipartiteError, ValueError):
    pass


class DegenerateMetricError(SignedBipartiteError, ValueError):
    pass


class TrainingError(SignedBipartiteError, RuntimeError):
    pass


class NonConvergenceError(SignedBipartiteError, RuntimeError):
    pass


class ConfigError(SignedBipartiteError, ValueError):
    pass
