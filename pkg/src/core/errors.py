"""Exception types shared across the heat-kernel packages."""


class HeatKernelError(Exception):
    """Base class for errors raised by this project."""


class ShapeError(HeatKernelError, ValueError):
    """Operands have incompatible or unexpected shapes."""


class NonFiniteError(HeatKernelError, ArithmeticError):
    """A computation produced NaN or Inf."""


class DomainError(HeatKernelError, ValueError):
    """An argument lies outside the domain of a formula."""


class ConfigError(HeatKernelError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class ConvergenceError(HeatKernelError, RuntimeError):
    """An iterative procedure diverged."""
