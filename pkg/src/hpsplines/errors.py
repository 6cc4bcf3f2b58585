"""Exception hierarchy shared by all hpsplines modules."""


class HPSplinesError(Exception):
    """Base class for library errors."""


class ConfigError(HPSplinesError, ValueError):
    """Invalid problem, optimizer or run configuration."""


class DescriptorMismatch(HPSplinesError, ValueError):
    """An operation was called with an incompatible group descriptor."""


class SingularityError(HPSplinesError, ArithmeticError):
    """A required matrix inverse does not exist (Cayley chart boundary, cut locus)."""


class StepSizeError(HPSplinesError, ArithmeticError):
    """The Cayley argument h*xi left the configured chart radius."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ImplicitSolveError(HPSplinesError, ArithmeticError):
    """The implicit Legendre update could not be solved."""


class UnsupportedLagrangian(HPSplinesError, NotImplementedError):
    """The adjoint gradient is only derived for the squared-velocity Lagrangian."""
