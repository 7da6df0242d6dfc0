"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised when a caller passes arguments outside an operation's domain."""


class DegenerateStatistic(ArithmeticError):
    """A test statistic has a zero denominator."""


class NumericError(ArithmeticError):
    """An iterative numerical routine failed to converge."""


class ObjectiveError(RuntimeError):
    """Objective evaluation failed for a specific particle."""

    def __init__(self, message, particle=None, iteration=None, position=None):
        super().__init__(message)
        self.particle = particle
        self.iteration = iteration
        self.position = position


class NonFiniteFitness(ObjectiveError):
    """Objective returned NaN or infinity; the run cannot continue."""


class ConfigError(InvalidArgument):
    """An experiment configuration file is malformed or references unknown ids."""
