"""Exception hierarchy shared across the package."""


class DrgpbError(Exception):
    """Base class for all package errors."""


class ModelError(DrgpbError, ValueError):
    """An MJLS model or schedule violates its invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConfigError(DrgpbError, ValueError):
    """A configuration file is malformed or inconsistent."""


class NumericalError(DrgpbError, ArithmeticError):
    """A numerical step of the filter could not be carried out."""


class SingularInnovationError(NumericalError):
    def __init__(self, mode, step=None, cond=None):
        self.mode = mode
        self.step = step
        self.cond = cond
        where = f"mode {mode}" if step is None else f"mode {mode} at step {step}"
        msg = f"innovation covariance is numerically singular for {where}"
        if cond is not None:
            msg += f" (eigenvalue ratio {cond:.3e})"
        super().__init__(msg)


class DegenerateEvidenceError(NumericalError):
    """Every mode assigned zero likelihood to the observation."""


class FilterStepError(NumericalError):
    """Wraps a numerical failure with the step (and run) at which it happened."""

    def __init__(self, step, cause, run=None):
        self.step = step
        self.run = run
        self.cause = cause
        prefix = f"run {run}, " if run is not None else ""
        super().__init__(f"{prefix}step {step}: {cause}")
