"""Exception hierarchy and budget defaults shared across modules."""

from __future__ import annotations

import os

DEFAULT_BUDGET = 10**7


class PrlabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(PrlabError, ValueError):
    """Invalid input or configuration (CLI exit code 4)."""


class ParseError(ConfigError):
    pass


class DimensionError(ConfigError):
    pass


class OrderError(ConfigError):
    pass


class FieldError(ConfigError):
    pass


class SizeLimitError(PrlabError):
    """An enumeration or evaluation budget would be exceeded (CLI exit code 3)."""


class CheckFailure(PrlabError):
    """A verification check failed (CLI exit code 2)."""


def budget(default: int = DEFAULT_BUDGET) -> int:
    """Enumeration budget, overridable through ``PRLAB_BUDGET``."""
    raw = os.environ.get("PRLAB_BUDGET")
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PRLAB_BUDGET must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ConfigError("PRLAB_BUDGET must be positive")
    return value
