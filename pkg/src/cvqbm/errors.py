"""Exception hierarchy shared by every cvqbm module."""


class CvqbmError(Exception):
    """Base class for all package errors."""


class InvalidArgument(CvqbmError, ValueError):
    pass


class UnsupportedShape(CvqbmError, ValueError):
    pass


class SqueezingOutOfRange(InvalidArgument):
    pass


class DegeneratePostSelection(CvqbmError, ArithmeticError):
    """Raised when a post-selected branch carries (numerically) zero weight.

    ``step`` is the 1-based QITE step index when known and ``params`` the
    parameter vector that produced the failure, if the caller attached it.
    """

    def __init__(self, probability, step=None, params=None):
        self.probability = float(probability)
        self.step = step
        self.params = params
        where = f" at step {step}" if step is not None else ""
        super().__init__(
            f"post-selection probability {self.probability:.3e}{where} is below 1e-14"
        )


class CutoffInsufficient(InvalidArgument):
    def __init__(self, captured, cutoff):
        self.captured = float(captured)
        self.cutoff = cutoff
        super().__init__(
            f"cutoff {cutoff} captures only {self.captured:.4f} of the encoded norm (< 0.9)"
        )


class GradientUnavailable(CvqbmError, ArithmeticError):
    def __init__(self, coordinate):
        self.coordinate = coordinate
        super().__init__(f"finite-difference probe failed for coordinate {coordinate}")


class InitializationFailed(CvqbmError, RuntimeError):
    pass


class ParseError(CvqbmError, ValueError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class ConfigError(CvqbmError, ValueError):
    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        # messages already name the field; syntax errors gain a position
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
