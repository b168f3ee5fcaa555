"""Exception types raised by the quasistat library."""


class QuasistatError(Exception):
    """Base class for all quasistat errors."""


class DomainError(QuasistatError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(QuasistatError, ValueError):
    """A run configuration is invalid (CLI exit code 1)."""


class DegenerateKernelError(QuasistatError):
    """The one-step survival probability is zero: the state escapes the
    region almost surely, so conditioning on survival is undefined."""


class VacuousThresholdError(QuasistatError):
    """No grid row can exceed the threshold in one step, so the killed
    kernel is (numerically) stochastic and the exit problem is vacuous."""


class ExtinctionError(QuasistatError):
    """The iterated distribution lost all mass in one step (L1 norm
    underflowed to zero)."""


class NonConvergenceError(QuasistatError):
    """An operation required a converged solution but did not get one."""


class DivergenceError(QuasistatError):
    """The survival eigenvalue is too close to 1 for a finite expected
    exit time."""


class SingularSystemError(QuasistatError):
    """The fundamental-matrix linear system could not be solved."""


class DegenerateRowError(QuasistatError):
    """A kernel row has zero survival mass and cannot be normalized."""


class CapDominatedError(QuasistatError):
    """More than 1% of Monte Carlo replications hit the step cap, so the
    estimate would be dominated by censoring (CLI exit code 2)."""
