# errors.py
# Exception hierarchy for the multi-RAT trust simulator

from typing import List, Optional


class RatsimError(Exception):
    """Base class for every error raised by the simulator."""


class ValidationError(RatsimError, ValueError):
    pass


class ConfigurationError(RatsimError, ValueError):
    pass


class UnknownRatError(RatsimError, KeyError):
    def __init__(self, rat_id: str):
        super().__init__(rat_id)
        self.rat_id = rat_id

    def __str__(self) -> str:
        return f"unknown RAT '{self.rat_id}'"


class FlowAssignmentError(RatsimError, ValueError):
    pass


class ScenarioError(RatsimError):
    """
    Raised when a scenario cannot be simulated.

    Carries the parser diagnostics (or pre-run validation findings) so the CLI
    can print them with line numbers.
    """

    def __init__(self, message: str, diagnostics: Optional[List] = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
