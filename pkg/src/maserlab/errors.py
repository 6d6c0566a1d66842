"""Exception types shared across maserlab.

The CLI maps each family to an exit code: configuration problems exit 2,
numerical-validity failures exit 3, and regime errors exit 4.
"""


class MaserlabError(Exception):
    exit_code = 1


class ConfigError(MaserlabError, ValueError):
    """Invalid or inconsistent user input (bad keys, units, conflicts)."""

    exit_code = 2


class NumericalError(MaserlabError, RuntimeError):
    """A run produced an untrustworthy result (NaN, truncation, poor fit)."""

    exit_code = 3


class RegimeError(MaserlabError, ValueError):
    """The request is outside the regime where the requested formula holds."""

    exit_code = 4


class DegenerateDressingError(RegimeError):
    pass


class NoStationaryStateError(RegimeError):
    pass


class NoThresholdError(RegimeError):
    pass


class AboveThresholdError(RegimeError):
    pass


class BelowThresholdError(RegimeError):
    pass
