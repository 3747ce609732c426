"""Exception hierarchy and resource caps shared by every module."""

from __future__ import annotations

import os


class CmlError(Exception):
    """Base class for all errors raised by the package."""


class InvalidAngleError(CmlError, ValueError):
    pass


class InvalidInputError(CmlError, ValueError):
    pass


class ResourceLimitError(CmlError):
    pass


class NotDecidableError(CmlError):
    """Raised when an exact decision is requested on approximate data."""


class NotApplicableError(CmlError):
    pass


class InsufficientDataError(CmlError):
    pass


class NotInvertibleError(CmlError, ValueError):
    pass


MAX_TRUNCATION = 20
MAX_WINDOW = 10**6
# 3**12 coefficients; expanding more active factors than this is refused.
MAX_EXPANDED_FACTORS = 12
DEFAULT_MAX_ATOMS = 10**5
# largest n for exact arithmetic in Q(zeta_n)
MAX_CONDUCTOR = 5040


def max_atoms() -> int:
    raw = os.environ.get("CML_MAX_ATOMS")
    if raw is None:
        return DEFAULT_MAX_ATOMS
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidInputError(f"CML_MAX_ATOMS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise InvalidInputError("CML_MAX_ATOMS must be positive")
    return value


def check_window(w: int) -> int:
    if w < 0:
        raise InvalidInputError(f"window must be non-negative, got {w}")
    if w > MAX_WINDOW:
        raise ResourceLimitError(f"window {w} exceeds cap {MAX_WINDOW}")
    return w
