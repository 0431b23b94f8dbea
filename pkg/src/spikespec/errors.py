"""Exception and warning types raised by the toolkit.

Every numerical failure derives from :class:`ToolkitError`, which the command
line front end maps to exit status 2. Configuration problems raise
:class:`ConfigError` (exit status 1).
"""


class ToolkitError(Exception):
    """Base class for numerical failures."""


class NoGroundState(ToolkitError):
    """The shooting bracket for w(0) could not be established."""


class ToleranceNotMet(ToolkitError):
    """Bisection stalled with a bracket wider than the requested tolerance."""


class TailTooShort(ToolkitError):
    """Too few samples in the outer third of the grid for a decay fit."""


class ConvergenceFailure(ToolkitError):
    """The generalized eigensolver did not converge."""


class BracketFailure(ToolkitError):
    """The first fiber branch does not change sign on the search range."""


class DomainTooSmall(ToolkitError):
    """The truncation radius is below the admissible minimum."""


class InsufficientData(ToolkitError):
    """Too few eigenvalues for an asymptotic fit."""


class DegenerateJacobi(ToolkitError):
    """A Jacobi eigenvalue needed for the inversion vanishes."""


class SpectraTooShort(ToolkitError):
    """An eigenvalue list ends before the branch exceeds the threshold."""


class NoAdmissibleEpsilon(ToolkitError):
    """No sampled epsilon clears the invertibility score threshold."""


class NoCrossing(ToolkitError):
    """The requested branch does not cross zero in the epsilon range."""


class SolvabilityViolation(ToolkitError):
    """The corrector right-hand side is not orthogonal to the kernel."""


class SingularSystem(ToolkitError):
    """The bordered corrector system is numerically singular."""


class ConfigError(Exception):
    """A run configuration failed validation."""


class DegenerateModelWarning(UserWarning):
    """Some Jacobi eigenvalue of the model submanifold is zero."""


class EmptyWindowWarning(UserWarning):
    """No model eigenvalue falls inside the gap window."""
