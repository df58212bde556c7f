"""Input validation helpers normalizing censored-data arguments to arrays."""

from __future__ import annotations

import numpy as np

from .data import CensoredInterval
from .exceptions import EmptyDataError, LengthMismatchError, NegativeTimeError


def interval_arrays(data, expand: bool = False):
    """Normalize interval input to (left, right, multiplicity) arrays.

    Accepts a sequence of CensoredInterval, an (N, 2) or (N, 3) array-like,
    or a (left, right[, multiplicity]) tuple of arrays. right may contain
    +inf. With expand=True multiplicities are expanded to unit rows (the
    resampling representation).
    """
    if isinstance(data, tuple) and len(data) in (2, 3) and not isinstance(data[0], CensoredInterval):
        cols = [np.asarray(c) for c in data]
        left, right = cols[0].astype(float), cols[1].astype(float)
        mult = cols[2] if len(cols) == 3 else np.ones(left.shape, dtype=np.int64)
    else:
        data = list(data) if not isinstance(data, np.ndarray) else data
        if len(data) == 0:
            raise EmptyDataError("no intervals supplied")
        if isinstance(data, list) and isinstance(data[0], CensoredInterval):
            left = np.array([iv.left for iv in data], dtype=float)
            right = np.array([iv.right for iv in data], dtype=float)
            mult = np.array([iv.multiplicity for iv in data], dtype=np.int64)
        else:
            arr = np.asarray(data, dtype=float)
            if arr.ndim != 2 or arr.shape[1] not in (2, 3):
                raise ValueError("interval array must have shape (N, 2) or (N, 3)")
            left, right = arr[:, 0], arr[:, 1]
            mult = arr[:, 2] if arr.shape[1] == 3 else np.ones(len(arr), dtype=np.int64)

    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if left.shape != right.shape or left.shape != np.shape(mult):
        raise LengthMismatchError("left, right, and multiplicity lengths differ")
    if left.size == 0:
        raise EmptyDataError("no intervals supplied")
    if np.any(~np.isfinite(left)) or np.any(left < 0):
        raise NegativeTimeError("interval left endpoints must be finite and >= 0")
    if np.any(np.isnan(right)) or np.any(right < left):
        raise ValueError("interval right endpoints must satisfy right >= left")
    mult = np.asarray(mult)
    if np.any(mult != np.floor(mult)) or np.any(mult < 1):
        raise ValueError("multiplicities must be positive integers")
    mult = mult.astype(np.int64)
    if expand:
        left = np.repeat(left, mult)
        right = np.repeat(right, mult)
        mult = np.ones(left.shape, dtype=np.int64)
    return left, right, mult


def check_durations(durations, events=None):
    """Normalize (durations, event indicators) for right-censored data."""
    t = np.asarray(durations, dtype=float).ravel()
    if t.size == 0:
        raise EmptyDataError("no durations supplied")
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise NegativeTimeError("durations must be finite and >= 0")
    if events is None:
        e = np.ones(t.shape, dtype=np.int64)
    else:
        e = np.asarray(events).ravel()
        if e.shape != t.shape:
            raise LengthMismatchError("durations and events lengths differ")
        if not np.all(np.isin(e, (0, 1))):
            raise ValueError("event indicators must be 0 or 1")
        e = e.astype(np.int64)
    return t, e


def check_positive(name: str, value: float):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return float(value)
