"""
Exception hierarchy for the quantum Wishart sampler

Configuration problems derive from ConfigError (CLI exit code 2), numerical
failures from NumericError (CLI exit code 3).
"""

from typing import Any, Dict


class WishartError(Exception):
    """Base class for every error raised by the package."""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict:
        """
        Machine-readable form used by the CLI on stderr.

        Returns:
            Dictionary with error name, message and JSON-friendly details
        """
        return {
            'error': type(self).__name__,
            'message': self.message,
            'details': {key: _jsonable(value) for key, value in self.details.items()},
        }

    def __reduce__(self):
        return _restore, (type(self), self.message, self.details)


class ConfigError(WishartError, ValueError):
    """Invalid parameters, inputs or configuration."""


class DimensionMismatch(ConfigError):
    pass


class RadiusOutOfRange(ConfigError):
    pass


class ZeroVector(ConfigError):
    pass


class InvalidParams(ConfigError):
    pass


class EmptySample(ConfigError):
    pass


class NotFullRank(ConfigError):
    pass


class NumericError(WishartError, ArithmeticError):
    """A numerical procedure failed or produced an invalid result."""


class CholeskyFailure(NumericError):
    pass


class NonConvergence(NumericError):
    pass


class SingularState(NumericError):
    pass


class QuadratureFailure(NumericError):
    pass


class NoRoot(NumericError):
    """Raised by the radial mean fit; details carry the radial derivative profile."""


class FixedPointDivergence(NumericError):
    pass


class UnboundedRatio(NumericError):
    """The target/proposal ratio is not bounded (proposal vanishes where the target does not)."""


class RatioExceedsBound(NumericError):
    """A sampled ratio exceeded the envelope constant; details carry the offending state."""

    @property
    def state(self):
        return self.details.get('state')


def _jsonable(value: Any) -> Any:
    if hasattr(value, 'tolist'):
        return _jsonable(value.tolist())
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def _restore(cls, message, details):
    return cls(message, **details)
