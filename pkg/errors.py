"""
Exception hierarchy for Virtual Qubit Machines.
Each error class carries the process exit code the CLI reports for it.
"""
from typing import Optional, Sequence


class MachineError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class UsageError(MachineError):
    """Malformed request: bad flag values, empty ranges, impossible sizes."""

    exit_code = 2


class ValidationError(MachineError):
    """A machine or parameter set violates a physical or resource constraint."""

    exit_code = 3

    def __init__(self, message: str, field: Optional[str] = None,
                 violations: Optional[Sequence[str]] = None):
        super().__init__(message)
        self.field = field
        self.violations = list(violations or [])


class DegenerateMachineError(ValidationError):
    """The requested quantity is singular for this machine (e.g. beta_v == beta_c)."""


class DocumentError(ValidationError):
    """A machine document could not be parsed or names undefined entities."""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
            if column is not None:
                location.append(f"column {column}")
        if field is not None:
            location.append(f"field '{field}'")
        text = f"{message} ({', '.join(location)})" if location else message
        super().__init__(text, field=field)
        self.line = line
        self.column = column


class SolverError(MachineError):
    """Numerical failure while solving for a steady state."""

    exit_code = 4


class ReducibleGeneratorError(SolverError):
    """The rate matrix has more than one closed class, so no unique steady state."""
