"""Censored-observation data model: records, intervals, and time frames.

Longitudinal screening data arrive as per-individual sequences of
(time, status) pairs where status 1 means the event has already occurred by
that time. Each individual's sequence collapses to a single censoring
interval: the last disease-free time is a strict lower bound for the event
time and the first diseased time is an inclusive upper bound, so the interval
carries the event in the half-open sense (left, right]. Individuals never
seen diseased are right-censored (right = +inf); individuals already diseased
at their first visit are left-censored (left = the lower support bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import (
    EmptyDataError,
    EmptyFrameError,
    MonotonicityViolation,
    NegativeTimeError,
)

INF = math.inf


@dataclass(frozen=True)
class ObservationRecord:
    """One screening visit: individual id, visit time, and binary status."""

    individual_id: object
    time: float
    status: int

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise NegativeTimeError(
                f"observation time must be finite and >= 0, got {self.time!r} "
                f"for individual {self.individual_id!r}"
            )
        if self.status not in (0, 1):
            raise ValueError(f"status must be 0 or 1, got {self.status!r}")


@dataclass(frozen=True)
class CensoredInterval:
    """A censoring interval (left, right] with an optional multiplicity.

    left == right encodes an exactly observed event time. right may be +inf
    (right-censored). Immutable once constructed.
    """

    left: float
    right: float
    multiplicity: int = 1

    def __post_init__(self):
        if not math.isfinite(self.left) or self.left < 0:
            raise NegativeTimeError(f"interval left endpoint invalid: {self.left!r}")
        if math.isnan(self.right) or self.right < self.left:
            raise ValueError(
                f"interval right endpoint must satisfy right >= left, got "
                f"({self.left!r}, {self.right!r})"
            )
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 1:
            raise ValueError(f"multiplicity must be a positive integer, got {self.multiplicity!r}")

    @property
    def is_exact(self) -> bool:
        return self.right == self.left

    @property
    def is_right_censored(self) -> bool:
        return math.isinf(self.right)


@dataclass(frozen=True)
class TimeFrame:
    """Observation window (left, right) inside the support (support bounds)."""

    left: float
    right: float
    support_left: float = 0.0
    support_right: float = INF

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)):
            raise EmptyFrameError("frame endpoints must be finite")
        if self.left >= self.right:
            raise EmptyFrameError(
                f"frame must have positive width, got [{self.left}, {self.right}]"
            )
        if self.support_left > self.left or self.right > self.support_right:
            raise EmptyFrameError("frame must lie inside its support bounds")

    @property
    def width(self) -> float:
        return self.right - self.left


def validate_records(records) -> list[list[ObservationRecord]]:
    """Group records by individual and check per-individual consistency.

    Returns one time-sorted series per individual (first-seen order).
    Raises MonotonicityViolation if a status ever switches from 1 back to 0,
    which the irreversible-event model forbids.
    """
    groups: dict[object, list[ObservationRecord]] = {}
    for rec in records:
        groups.setdefault(rec.individual_id, []).append(rec)
    series = []
    for ind, recs in groups.items():
        recs = sorted(recs, key=lambda r: r.time)
        last = 0
        for r in recs:
            if r.status < last:
                raise MonotonicityViolation(
                    f"individual {ind!r}: status drops from 1 to 0 at time {r.time}"
                )
            last = r.status
        series.append(recs)
    return series


def summarize_observations(
    series, support_left: float = 0.0, support_right: float = INF
) -> CensoredInterval:
    """Collapse one individual's visit series to its censoring interval.

    left = the last disease-free time (or support_left if never seen
    disease-free); right = the first diseased time (or support_right, normally
    +inf, if never seen diseased).
    """
    series = list(series)
    if not series:
        raise EmptyDataError("cannot summarize an empty visit series")
    free = [r.time for r in series if r.status == 0]
    hit = [r.time for r in series if r.status == 1]
    left = max(free) if free else support_left
    right = min(hit) if hit else support_right
    return CensoredInterval(left=left, right=right)


def summarize_all(
    records, support_left: float = 0.0, support_right: float = INF
) -> list[CensoredInterval]:
    """validate_records + summarize_observations for every individual."""
    return [
        summarize_observations(s, support_left, support_right)
        for s in validate_records(records)
    ]


def estimate_time_frame(
    records, support_left: float = 0.0, support_right: float = INF
) -> TimeFrame:
    """Observation frame spanned by the visit times: (min time, max time)."""
    times = [r.time for r in records]
    if not times:
        raise EmptyDataError("cannot estimate a time frame from no records")
    return TimeFrame(min(times), max(times), support_left, support_right)


def frame_from_intervals(
    intervals, support_left: float = 0.0, support_right: float = INF
) -> TimeFrame:
    """Frame spanned by the finite interval endpoints.

    Interval endpoints are themselves observation times (plus sentinel bounds),
    so this is the best frame recoverable once visits were summarized away.
    """
    finite = []
    for iv in intervals:
        finite.append(iv.left)
        if math.isfinite(iv.right):
            finite.append(iv.right)
    if not finite:
        raise EmptyDataError("cannot build a frame from no intervals")
    return TimeFrame(min(finite), max(finite), support_left, support_right)


def with_finite_right(intervals, bound: float) -> list[CensoredInterval]:
    """Replace +inf right endpoints with a finite bound."""
    return [
        CensoredInterval(iv.left, bound, iv.multiplicity) if iv.is_right_censored else iv
        for iv in intervals
    ]


def with_infinite_right(intervals, bound: float) -> list[CensoredInterval]:
    """Inverse of with_finite_right for the same bound."""
    return [
        CensoredInterval(iv.left, INF, iv.multiplicity) if iv.right == bound else iv
        for iv in intervals
    ]
