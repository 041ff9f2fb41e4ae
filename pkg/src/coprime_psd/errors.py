"""Exception hierarchy.

Errors are grouped by failure class so callers (and the CLI exit-code
contract) can branch on the base class rather than on every leaf.
"""


class CoprimePSDError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CoprimePSDError, ValueError):
    """Invalid parameters or configuration."""


class ShapeError(CoprimePSDError, ValueError):
    """Array lengths or lag windows that do not line up."""


class CoverageError(CoprimePSDError):
    """The sampling scheme does not cover the requested lags."""


class NonPositiveParameterError(ConfigError):
    pass


class OrderViolationError(ConfigError):
    pass


class NotCoprimeError(ConfigError):
    pass


class WindowTooWideError(ConfigError):
    pass


class FrequencyOutOfBandError(ConfigError):
    pass


class SymbolRateTooHighError(ConfigError):
    pass


class SweepOutOfBandError(ConfigError):
    pass


class ZeroSignalPowerError(ConfigError):
    pass


class EmptyTrialsError(ConfigError):
    pass


class LengthMismatchError(ShapeError):
    pass


class LagWindowMismatchError(ShapeError):
    pass


class AllLagsUncoveredError(CoverageError):
    pass


class UncoveredLagError(CoverageError):
    """Raised in strict mode when any lag in the window has no sample pair."""

    def __init__(self, lags):
        self.lags = list(lags)
        shown = ", ".join(str(m) for m in self.lags[:10])
        more = "" if len(self.lags) <= 10 else f", ... ({len(self.lags)} total)"
        super().__init__(f"uncovered lags: {shown}{more}")
