"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numeric failures with 3 and I/O errors with 4.
"""
from __future__ import annotations


class RifsLabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RifsLabError):
    """Invalid configuration.  Collects every problem found, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NotContractingError(ConfigError):
    """The system is not contracting on average (Lyapunov exponent >= 0)."""

    def __init__(self, chi: float):
        self.chi = float(chi)
        super().__init__(
            f"not contracting on average: Lyapunov exponent chi = {chi:.6g} >= 0"
        )


class NumericError(RifsLabError):
    """A numeric routine failed to meet its tolerance or iteration budget."""

    def __init__(self, message: str, achieved: float | None = None):
        self.achieved = achieved
        super().__init__(message)
