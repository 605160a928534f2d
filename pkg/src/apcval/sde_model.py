"""Stop-door events, relative differences and sample summaries.

A stop-door event (SDE) pairs the manual (ground-truth) count with the
automatic count at one door during one vehicle stop.  Boarding and
alighting are separate streams and are never mixed in one sample.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

__all__ = [
    "Direction",
    "StopDoorEvent",
    "CountSample",
    "SampleSummary",
    "SampleError",
    "EmptySampleError",
    "DegenerateSampleError",
    "InsufficientSampleError",
    "CsvFormatError",
    "relative_differences",
    "summarize",
    "summarize_differences",
    "proof_of_concept_sample",
    "parse_csv",
    "read_csv",
    "write_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("stop_id", "door_id", "direction", "manual", "automatic")


class SampleError(ValueError):
    """Base class for samples that cannot be evaluated."""


class EmptySampleError(SampleError):
    pass


class DegenerateSampleError(SampleError):
    """Mean manual count is zero, so relative differences are undefined."""


class InsufficientSampleError(SampleError):
    """Fewer than two events; the standard deviation is undefined."""


class CsvFormatError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class Direction(str, enum.Enum):
    BOARDING = "boarding"
    ALIGHTING = "alighting"


@dataclass(frozen=True)
class StopDoorEvent:
    stop_id: str
    door_id: str
    direction: Direction
    manual: int
    automatic: int

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        for name in ("manual", "automatic"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"{name} count must be an int, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} count must be >= 0, got {value}")


@dataclass(frozen=True)
class CountSample:
    """Ordered stop-door events of a single direction."""

    events: tuple[StopDoorEvent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        directions = {e.direction for e in events}
        if len(directions) > 1:
            raise ValueError("a sample must not mix boarding and alighting events")

    @classmethod
    def from_counts(
        cls,
        manual: Sequence[int],
        automatic: Sequence[int],
        direction: Direction | str = Direction.BOARDING,
    ) -> "CountSample":
        if len(manual) != len(automatic):
            raise ValueError("manual and automatic counts differ in length")
        events = tuple(
            StopDoorEvent(f"s{i}", "d0", Direction(direction), int(m), int(k))
            for i, (m, k) in enumerate(zip(manual, automatic))
        )
        return cls(events)

    @property
    def n(self) -> int:
        return len(self.events)

    @property
    def direction(self) -> Direction | None:
        return self.events[0].direction if self.events else None

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class SampleSummary:
    """Sufficient statistics consumed by every admission test.

    Attributes
    ----------
    n : int
        Number of stop-door events.
    m_bar : float
        Mean manual count (passengers).
    d_bar : float
        Mean relative difference.
    v_hat : float
        Sample standard deviation of the relative differences (n - 1
        denominator).
    """

    n: int
    m_bar: float
    d_bar: float
    v_hat: float

    def __post_init__(self):
        if self.n < 2:
            raise InsufficientSampleError(f"need n >= 2, got {self.n}")
        if not (self.v_hat >= 0) or not math.isfinite(self.v_hat):
            raise ValueError(f"v_hat must be finite and >= 0, got {self.v_hat}")
        if not math.isfinite(self.d_bar):
            raise ValueError(f"d_bar must be finite, got {self.d_bar}")
        if self.m_bar < 0:
            raise ValueError(f"m_bar must be >= 0, got {self.m_bar}")


def relative_differences(sample: CountSample) -> list[float]:
    """``(automatic - manual) / mean(manual)`` for each event, in order."""
    if sample.n == 0:
        raise EmptySampleError("sample has no events")
    total_manual = sum(e.manual for e in sample.events)
    if total_manual == 0:
        raise DegenerateSampleError("mean manual count is zero")
    m_bar = total_manual / sample.n
    return [(e.automatic - e.manual) / m_bar for e in sample.events]


def summarize_differences(diffs: Sequence[float], m_bar: float = math.nan) -> SampleSummary:
    n = len(diffs)
    if n < 2:
        raise InsufficientSampleError(f"need at least 2 events, got {n}")
    d_bar = math.fsum(diffs) / n
    ss = math.fsum((d - d_bar) ** 2 for d in diffs)
    return SampleSummary(n=n, m_bar=m_bar, d_bar=d_bar, v_hat=math.sqrt(ss / (n - 1)))


def summarize(sample: CountSample) -> SampleSummary:
    """Mean and sample standard deviation of the relative differences."""
    if sample.n == 0:
        raise EmptySampleError("sample has no events")
    if sample.n < 2:
        raise InsufficientSampleError(f"need at least 2 events, got {sample.n}")
    diffs = relative_differences(sample)
    m_bar = sum(e.manual for e in sample.events) / sample.n
    return summarize_differences(diffs, m_bar=m_bar)


def proof_of_concept_sample(n: int, m_per_event: int = 1) -> CountSample:
    """A nearly perfect counter that still fails the plain t-test.

    Every event has `m_per_event` manual boardings; three of them are
    over-counted by 1, 2 and 2 passengers, all others are exact.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if m_per_event < 1:
        raise ValueError(f"m_per_event must be positive, got {m_per_event}")
    errors = [1, 2, 2] + [0] * (n - 3)
    manual = [m_per_event] * n
    automatic = [m_per_event + e for e in errors]
    return CountSample.from_counts(manual, automatic)


def _parse_count(raw: str, column: str, line: int) -> int:
    text = raw.strip()
    try:
        value = int(text)
    except ValueError:
        raise CsvFormatError(line, f"{column} is not an integer: {raw!r}") from None
    if value < 0:
        raise CsvFormatError(line, f"{column} must be >= 0, got {value}")
    return value


def parse_csv(stream: TextIO, direction: Direction | str | None = None) -> CountSample:
    """Parse SDE rows from an open text stream.

    Malformed rows raise :class:`CsvFormatError` carrying the 1-based line
    number; nothing is skipped or repaired.  With `direction` given, rows of
    the other direction are dropped; otherwise all rows must agree.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptySampleError("CSV file is empty") from None
    header = [h.strip().lstrip("\ufeff") for h in header]
    if tuple(header) != CSV_HEADER:
        raise CsvFormatError(1, f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")

    wanted = Direction(direction) if direction is not None else None
    events = []
    seen = None
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise CsvFormatError(line, f"expected {len(CSV_HEADER)} fields, got {len(row)}")
        stop_id, door_id, raw_dir, raw_m, raw_k = row
        try:
            d = Direction(raw_dir.strip().lower())
        except ValueError:
            raise CsvFormatError(line, f"unknown direction {raw_dir!r}") from None
        manual = _parse_count(raw_m, "manual", line)
        automatic = _parse_count(raw_k, "automatic", line)
        if wanted is not None:
            if d is not wanted:
                continue
        elif seen is not None and d is not seen:
            raise CsvFormatError(line, "mixed directions; select one with a direction filter")
        seen = d
        events.append(StopDoorEvent(stop_id.strip(), door_id.strip(), d, manual, automatic))
    return CountSample(tuple(events))


def read_csv(path: str | os.PathLike, direction: Direction | str | None = None) -> CountSample:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_csv(fh, direction)


def write_csv(sample: CountSample | Iterable[StopDoorEvent], stream: TextIO | None = None) -> str:
    events = sample.events if isinstance(sample, CountSample) else tuple(sample)
    buf = io.StringIO() if stream is None else stream
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for e in events:
        writer.writerow([e.stop_id, e.door_id, e.direction.value, e.manual, e.automatic])
    return buf.getvalue() if stream is None else ""
