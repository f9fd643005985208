"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``ContractError`` -> 2, ``RefusalError`` -> 3.
"""

from __future__ import annotations


class SignRegError(Exception):
    """Base class for all package errors."""


class StructuralError(SignRegError, ValueError):
    """Malformed input: wrong lengths, unsorted designs, empty blocks."""


class ContractError(SignRegError, ValueError):
    """A documented precondition does not hold (e.g. a function outside its class)."""


class RefusalError(SignRegError, RuntimeError):
    """The request is well formed but outside the supported or tractable range."""


class SimulationError(SignRegError, RuntimeError):
    """A Monte-Carlo run aborted because too many replications failed."""
