"""Exception hierarchy shared by every estimation stage."""

from __future__ import annotations


class GrowthDynError(Exception):
    """Base class for all package errors."""


class InsufficientData(GrowthDynError):
    pass


class NonFinite(GrowthDynError, ValueError):
    pass


class DegenerateSample(GrowthDynError):
    pass


class UnbalancedPanel(GrowthDynError):
    def __init__(self, missing):
        self.missing = list(missing)
        head = ", ".join(f"{r}/{y}" for r, y in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" (+{len(self.missing) - 10} more)"
        super().__init__(f"panel is unbalanced; missing region-years: {head}{more}")


class NonPositiveValue(GrowthDynError, ValueError):
    def __init__(self, message, *, region_id=None, year=None, source=None, line=None):
        self.region_id = region_id
        self.year = year
        self.source = source
        self.line = line
        super().__init__(message)


class DuplicateRecord(GrowthDynError):
    pass


class EmptyPeriod(GrowthDynError):
    pass


class TooFewObservations(GrowthDynError):
    pass


class ZeroVolatilityBin(GrowthDynError):
    pass


class NoConvergence(GrowthDynError):
    """Raised when an optimizer hits its cap; ``partial`` carries the last iterate."""

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class WindowTooLong(GrowthDynError):
    pass


class InvalidSpec(GrowthDynError, ValueError):
    pass


class SchemaError(GrowthDynError):
    pass


class JoinError(GrowthDynError):
    def __init__(self, message, missing=()):
        self.missing = list(missing)
        super().__init__(message)


class ParseError(GrowthDynError):
    pass


class ConfigError(GrowthDynError):
    pass
