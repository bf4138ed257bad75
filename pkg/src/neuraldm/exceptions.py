"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError/DataError -> 3, NumericError -> 4.
"""


class NeuralDMError(Exception):
    """Base class for all package errors."""


class ConfigError(NeuralDMError):
    """Invalid configuration value or empty required input."""


class DataError(NeuralDMError):
    """Malformed file, schema mismatch, or inconsistent records."""


class InvalidEvidenceError(DataError):
    """Per-slot evidence confidences sum to more than one."""


class NumericError(NeuralDMError):
    """Numerical failure: non-finite values or an unsolvable linear system."""
