"""Exception types raised across the package."""


class FeedbackCoolingError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FeedbackCoolingError, ValueError):
    """An argument lies outside the physical or mathematical domain."""


class InputError(FeedbackCoolingError, ValueError):
    """Missing or malformed user input (parameter files, CLI values)."""


class InstabilityError(FeedbackCoolingError, ArithmeticError):
    """A linear system has no stationary state.

    Attributes
    ----------
    eigenvalue : complex or None
        The offending drift eigenvalue (largest real part), when known.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DivergenceError(InstabilityError):
    """A Monte Carlo trajectory exceeded the divergence threshold."""

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class SingularityError(FeedbackCoolingError, ZeroDivisionError):
    """A closed-form expression was evaluated exactly at a removable pole."""


class EvaluationError(FeedbackCoolingError, ArithmeticError):
    """A closed-form evaluation hit a vanishing denominator."""


class OptimizationError(FeedbackCoolingError, RuntimeError):
    """A parameter search could not find a feasible optimum."""
