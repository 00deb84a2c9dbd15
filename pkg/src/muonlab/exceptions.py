"""Exception types raised across muonlab."""


class MuonlabError(Exception):
    """Base class for all muonlab errors."""


class DimensionError(MuonlabError, ValueError):
    """Operands have incompatible shapes."""


class DegenerateInputError(MuonlabError, ValueError):
    """Input carries no information (e.g. an all-zero matrix)."""


class NumericError(MuonlabError, ArithmeticError):
    """A NaN or Inf appeared in an input or an intermediate value."""


class StabilityConditionError(MuonlabError, ValueError):
    """The weight-decay stability condition eta <= 1/lambda does not hold."""


class InfeasibleBatchError(MuonlabError, ValueError):
    """Batch size is at or below Y/epsilon, where the step count is undefined."""


class FitError(MuonlabError, ValueError):
    """The complexity-model fit is degenerate."""


class BoundViolation(MuonlabError, AssertionError):
    """A trajectory exceeded a bound that theory says it must satisfy."""

    def __init__(self, name, step, value, bound):
        self.name = name
        self.step = step
        self.value = value
        self.bound = bound
        super().__init__(f"{name} violated at step {step}: {value!r} > {bound!r}")


class ConfigError(MuonlabError, ValueError):
    """An experiment config has unknown keys or values of the wrong type."""


class ArtifactIOError(MuonlabError, OSError):
    """Writing or reading an artifact failed; the message names the path."""
