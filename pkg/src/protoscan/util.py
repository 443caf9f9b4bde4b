"""Small shared helpers."""

from __future__ import annotations

import math

from .dataset import InputError


def round_half_up(x: float) -> int:
    """Round to the nearest integer with exact halves going up."""
    return int(math.floor(x + 0.5))


def resolve_count(value, n: int, clamp: bool = True) -> int:
    """Turn a sample-size knob into an absolute count.

    A float in ``(0, 1]`` is a fraction of ``n`` (rounded half-up); an int
    ``>= 1`` is taken literally. So ``0.2`` of 788 rows is 158 while ``158``
    is, too — but ``1.0`` means all rows and ``1`` means a single row.
    Absolute counts above ``n`` are clamped to ``n`` unless ``clamp`` is
    off, in which case they are rejected.
    """
    if isinstance(value, bool):
        raise InputError(f"sample size must be a number, got {value!r}")
    if isinstance(value, float) or (hasattr(value, "dtype") and "float" in str(value.dtype)):
        if not 0.0 < float(value) <= 1.0:
            raise InputError(f"fractional sample size must be in (0, 1], got {value}")
        return max(1, min(n, round_half_up(float(value) * n)))
    count = int(value)
    if count < 1:
        raise InputError(f"sample count must be >= 1, got {value}")
    if count > n and not clamp:
        raise InputError(f"sample count {count} exceeds the {n} available points")
    return min(count, n)
