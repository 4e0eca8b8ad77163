"""
Exceptions raised by the superpixel library
"""


class SuperpixelError(Exception):
    """Base class for every error the library raises on purpose"""


class ImageFormatError(SuperpixelError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BoundsError(SuperpixelError, IndexError):
    pass


class ParameterError(SuperpixelError, ValueError):
    pass


class DimensionMismatchError(SuperpixelError, ValueError):
    pass


class UndefinedRateError(SuperpixelError, ArithmeticError):
    pass
