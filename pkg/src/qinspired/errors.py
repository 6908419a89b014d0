"""Exception types shared across the package."""


class QinspiredError(Exception):
    """Base class for errors raised by this package."""


class SizeError(QinspiredError, ValueError):
    """A size or count is outside the supported range."""


class DomainError(QinspiredError, ValueError):
    """An input value lies outside the domain of the function."""


class ShapeError(QinspiredError, ValueError):
    """Array shapes do not match what the operation expects."""


class NumericalError(QinspiredError, ArithmeticError):
    """A computation produced non-finite values or an ill-posed system."""


class FormatError(QinspiredError, ValueError):
    """A file does not follow the expected binary or text format."""


class ParseError(FormatError):
    """A section of a text file could not be parsed."""

    def __init__(self, section, message):
        super().__init__(f"[{section}] {message}")
        self.section = section
