"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: validation-type errors exit 1,
solver/numerical errors exit 2.
"""


class FairWelfareError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(FairWelfareError, ValueError):
    """Inconsistent inputs: mismatched alphabets, bad parameters, invalid data."""


class UndefinedConditionalError(FairWelfareError, ValueError):
    """Conditioning on a zero-probability event.

    Carries a human-readable description of the offending event.
    """

    def __init__(self, event: str):
        super().__init__(f"conditional undefined: event {event} has zero probability")
        self.event = event


class DomainError(FairWelfareError, ValueError):
    """Value outside the admissible domain or range of a concave transform."""


class UnsupportedMeasureError(FairWelfareError, ValueError):
    """An operation was asked of a measure/transform that cannot support it."""


class CapacityError(FairWelfareError, ValueError):
    """Exhaustive enumeration would exceed the hard evaluation cap."""


class SolverError(FairWelfareError, RuntimeError):
    """Numerical failure inside an optimizer (non-convergence, pivot limit)."""


class ScenarioError(FairWelfareError, ValueError):
    """Scenario or policy document failed validation.

    `issues` is a list of location-prefixed messages, e.g.
    ``population.entries[3]: mass is negative``.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(self.issues))
