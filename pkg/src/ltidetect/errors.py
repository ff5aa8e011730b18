"""Exception hierarchy.

The three base classes map onto CLI exit codes (2, 3, 4); everything raised by
the library derives from one of them.
"""


class LTIError(Exception):
    exit_code = 1


class ConfigError(LTIError, ValueError):
    exit_code = 2


class DataError(LTIError, ValueError):
    exit_code = 3


class NumericError(LTIError, ArithmeticError):
    exit_code = 4


class ParseError(DataError):
    def __init__(self, path, row, column, message):
        self.path, self.row, self.column = path, row, column
        super().__init__(f"{path}: row {row}, column {column!r}: {message}")


class GapError(DataError):
    def __init__(self, missing):
        self.missing = missing
        super().__init__(f"missing timestamp {missing} (pass fill_gaps=True to interpolate)")


class AlignmentError(DataError):
    pass


class WarmupError(NumericError):
    """Raised when a frame is scored before the buffer holds L forecast sources."""


class DegenerateWeightsError(NumericError):
    pass


class DegenerateReferenceError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch, message="loss became NaN"):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


class RankDeficientError(NumericError):
    pass
