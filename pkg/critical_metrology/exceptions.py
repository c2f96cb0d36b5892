"""
Exception hierarchy shared by every app.

``exit_code`` is the process status management commands use when the error
escapes a command: 2 for configuration problems, 3 for numeric failures.
"""


class CriticalMetrologyError(Exception):
    exit_code = 3


class DomainError(CriticalMetrologyError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class ScheduleError(DomainError):
    """A control schedule is malformed or leaves the symmetric phase."""


class PoleError(DomainError):
    """An angle sits on a tangent pole of the normalization condition."""


class InvalidStateError(CriticalMetrologyError):
    """A state vector holds non-finite components."""


class IntegrationError(CriticalMetrologyError):
    """The ODE stepper failed or the phase could not be unwrapped."""


class EventLocalizationError(IntegrationError):
    """A control switch could not be bracketed on the dense output."""


class NumericOverflowError(IntegrationError):
    """Squeezing left the representable double-precision range."""


class TruncationError(CriticalMetrologyError):
    """Fock-space truncation is too small for the evolved state."""


class StepSizeError(CriticalMetrologyError):
    """A finite-difference derivative did not converge under step halving."""
