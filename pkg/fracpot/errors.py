"""Exceptions raised by fracpot, each tagged with the exit code the CLI uses"""


class FracpotError(Exception):
    exit_code: int = 1


class ConfigError(FracpotError, ValueError):
    """Invalid or unreadable scenario configuration"""
    exit_code = 2


class DomainError(FracpotError, ValueError):
    """Parameter outside the domain where a quantity is defined"""
    exit_code = 3


class UnsupportedRangeError(DomainError):
    pass


class RecurrenceError(DomainError):
    """The Green kernel does not exist: the space is not transient"""

    def __init__(self, message: str = "not transient"):
        super().__init__(message)


class NonIntegrableSingularityError(DomainError):
    pass


class CostGuardError(FracpotError, RuntimeError):
    """A resource guard (cells, depth, memory) was tripped"""
    exit_code = 4
