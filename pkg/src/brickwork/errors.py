"""Exception hierarchy.

Validation problems (bad shapes, caps, malformed configs) map to CLI exit
code 2; numerical failures map to exit code 3.
"""


class BrickworkError(Exception):
    exit_code = 1


class ValidationError(BrickworkError, ValueError):
    exit_code = 2

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class ShapeError(ValidationError):
    pass


class SizeLimitError(ValidationError):
    pass


class NumericalError(BrickworkError, ArithmeticError):
    exit_code = 3


class NumericalDriftError(NumericalError):
    def __init__(self, message, power=None):
        super().__init__(message)
        self.power = power


class StepSizeError(NumericalError):
    pass


class UnsupportedDecompositionError(NumericalError):
    pass


class UndefinedRatioError(NumericalError):
    pass


class EigensolverError(NumericalError):
    def __init__(self, message, dump_path=None):
        super().__init__(message)
        self.dump_path = dump_path
