from __future__ import annotations

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


class GuardnetError(Exception):
    """Base class for every error raised by guardnet."""

    exit_code = EXIT_DOMAIN


class ShapeError(GuardnetError, ValueError):
    pass


class AxisError(GuardnetError, ValueError):
    pass


class RangeError(GuardnetError, ValueError):
    pass


class NumericError(GuardnetError):
    """A tensor picked up NaN or Inf."""


class ConfigError(GuardnetError, ValueError):
    exit_code = EXIT_USAGE


class FormatError(GuardnetError):
    pass


class DatasetError(GuardnetError):
    pass


class DegenerateError(GuardnetError):
    pass


class SampleSizeError(GuardnetError):
    pass


class BenchError(GuardnetError):
    pass
