"""Error taxonomy shared across the package.

Input validation failures raise plain ValueError.  The classes below mark
failures of the numeric machinery itself so callers can distinguish them
from bad arguments.
"""


class ChartError(RuntimeError):
    """Boundary cellization could not be constructed (e.g. rejection budget hit)."""


class ConditioningError(RuntimeError):
    """No walk reached the inner boundary within the full sampling budget."""


class OracleError(RuntimeError):
    """A closed-form reference did not converge at its truncation budget."""
