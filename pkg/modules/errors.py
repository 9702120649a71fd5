"""
Exceptions raised by the power control library.

Validation failures are also ValueErrors so callers that only know the
standard library still catch them. Numerical failures carry a diagnostics
dict with the quantities the solver saw when it gave up.
"""

from typing import Any, Dict, Optional


class PowerControlError(Exception):
    """Base class for every error raised by the modules package."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(PowerControlError, ValueError):
    """A configuration key is missing, unparsable or out of range."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}", {"key": key})
        self.key = key


class DomainError(PowerControlError, ValueError):
    """An argument lies outside the domain of a formula."""


class QuadratureError(PowerControlError):
    """The fading expectation did not converge."""


class UnstableError(PowerControlError):
    """Mean service does not exceed mean arrivals (p*Lbar >= E[S])."""


class NoSolutionError(PowerControlError):
    """No sign change of the balance equation inside the search bracket."""


class InfeasibleError(PowerControlError):
    """The delay-outage target cannot be met even at Pmax."""


class MaxIterationsError(PowerControlError):
    """The power bracket did not shrink below tolerance in time."""
