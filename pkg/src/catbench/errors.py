"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems -> 1,
numerical failures -> 2, I/O failures -> 3.
"""


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


class NumericalError(RuntimeError):
    """A computation could not be carried out at the requested accuracy."""


class TruncationError(NumericalError):
    """Fock-space truncation too small for the requested tolerance."""

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class ImpossibleEventError(NumericalError):
    """Conditioning on an outcome of (numerically) zero probability."""
