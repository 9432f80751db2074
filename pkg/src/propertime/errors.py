"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: usage/config problems exit 2, numeric
failures (truncation, unwrapping) exit 3.
"""

from __future__ import annotations


class ProperTimeError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class InvalidDimension(ProperTimeError, ValueError):
    pass


class InvalidOperator(ProperTimeError, ValueError):
    pass


class DimensionMismatch(ProperTimeError, ValueError):
    pass


class UnphysicalParameters(ProperTimeError, ValueError):
    pass


class InsufficientData(ProperTimeError, ValueError):
    pass


class InvalidWitnessInput(ProperTimeError, ValueError):
    pass


class GridMismatch(ProperTimeError, ValueError):
    pass


class ConfigError(ProperTimeError, ValueError):
    pass


class TruncationOverflow(ProperTimeError):
    """The Fock truncation cannot hold the requested state or operator."""

    exit_code = 3

    def __init__(self, message: str, required_dim: int | None = None):
        if required_dim is not None:
            message = f"{message} (required dim >= {required_dim})"
        super().__init__(message)
        self.required_dim = required_dim


class UnwrapFailure(ProperTimeError):
    exit_code = 3

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} at sample {index}")
        self.index = index
