from typing import Optional


class WreathError(Exception):
    """Base class for every error raised by the toolkit"""


class UnknownGenerator(WreathError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"Unknown generator: {name}")


class UnknownLetter(WreathError):
    def __init__(self, letter):
        self.letter = letter
        super().__init__(f"Unknown letter: {letter}")


class ParseError(WreathError):
    def __init__(self, message: str, line: int = 0, column: int = 0, origin: str = "<inline>"):
        self.message = message
        self.line = line
        self.column = column
        self.origin = origin
        super().__init__(f"{origin}:{line}:{column}: {message}")


class ValidationError(WreathError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.message = message
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class BudgetExceeded(WreathError):
    def __init__(self, message: str, states: int = 0):
        self.states = states
        super().__init__(f"{message} (states so far: {states})")


class UnsupportedFormat(WreathError):
    def __init__(self, fmt):
        self.format = fmt
        super().__init__(f"Unsupported format: {fmt}")


class CertificateError(WreathError):
    """Raised when a certificate cannot be loaded or does not match its system"""
