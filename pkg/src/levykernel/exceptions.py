"""Exception types raised across the package."""


class LevyKernelError(Exception):
    """Base class for all package errors."""


class DomainError(LevyKernelError, ValueError):
    """Evaluation requested outside the domain of a function (e.g. y = 0)."""


class CapabilityError(LevyKernelError, ValueError):
    """The requested operation exceeds what a kernel or model supports."""


class NoDataError(LevyKernelError, ValueError):
    """An estimate has an empty occupation denominator."""


class SimulationError(LevyKernelError, ArithmeticError):
    """A simulated path left the finite reals."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(LevyKernelError, ValueError):
    """Invalid scenario configuration."""
