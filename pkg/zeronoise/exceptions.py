"""
Error hierarchy for the laboratory.

Every error carries the exit code the `lab` commands translate it into:
2 for bad parameters or configuration, 3 for numerical failures.
"""


class LabError(Exception):
    """Root of all laboratory errors"""

    exit_code = 3


class ParameterError(LabError, ValueError):
    """A parameter is outside its domain (alpha <= 0, t outside (0, 1], ...)"""

    exit_code = 2


class InputError(LabError, ValueError):
    """Malformed input: non-finite points, empty measures, dimension mismatch"""

    exit_code = 2


class ConfigError(ParameterError):
    """Experiment file or override could not be resolved"""


class ContractViolation(LabError):
    """A caller broke a precondition that is not a plain parameter range"""


class NumericError(LabError, ArithmeticError):
    """A numerical procedure failed"""


class InfeasibleError(NumericError):
    """No expansion band could be certified above s"""


class AssemblyError(NumericError):
    """An Ulam row missed unit mass by more than the accepted defect"""


class InversionError(NumericError):
    """Bisection inverse of a lift did not converge"""


class NonConvergenceError(NumericError):
    """Power iteration ran out of iterations"""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class HypothesisError(NumericError):
    """An iterated image left the region the distortion bound assumes"""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class StageError(LabError):
    """A driver stage failed; wraps the underlying error"""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def exit_code(self):
        return getattr(self.cause, 'exit_code', 3)
