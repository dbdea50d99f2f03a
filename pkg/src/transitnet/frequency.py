"""Weekly trip counts, the high/low-frequency split and two-hour slot flows."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, time
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstantSeries, EmptyCounts
from .preprocess import TravelChain

SLOT_LABELS = tuple(f"{h:02d}-{h + 2:02d}" for h in range(0, 24, 2))


@dataclass(frozen=True)
class Window:
    """Half-open datetime interval ``[start, end)``."""

    start: datetime
    end: datetime

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("window start must precede its end")

    def __contains__(self, ts: datetime) -> bool:
        return self.start <= ts < self.end


@dataclass(frozen=True)
class DailyWindow:
    """Time-of-day interval ``[start, end)`` applied to every day."""

    name: str
    start: time
    end: time

    def __contains__(self, ts: datetime) -> bool:
        t = ts.time()
        return self.start <= t < self.end


DEFAULT_PEAKS = (DailyWindow("morning", time(6), time(10)), DailyWindow("evening", time(18), time(20)))


def count_trips(chains: Iterable[TravelChain], window: Window | None = None) -> dict[str, int]:
    """Chains per passenger whose first swipe falls inside ``window``."""
    c = Counter(ch.passenger_id for ch in chains if window is None or ch.start in window)
    return dict(c)


@dataclass
class FrequencySplit:
    counts: Mapping[str, int]
    threshold: int
    quantile: float
    hf_ids: frozenset
    lf_ids: frozenset
    window: Window | None = None

    @property
    def hf_share(self) -> float:
        return len(self.hf_ids) / len(self.counts)

    def cohort(self, passenger_id: str) -> str | None:
        if passenger_id in self.hf_ids:
            return "high"
        if passenger_id in self.lf_ids:
            return "low"
        return None


def split_hf_lf(counts: Mapping[str, int], quantile: float = 0.25, window: Window | None = None) -> FrequencySplit:
    """Threshold at the smallest trip count ``t`` whose tail share ``#{count >= t} / N`` is at most ``quantile``.

    Passengers at or above ``t`` are high-frequency.
    """
    if not counts:
        raise EmptyCounts("no passengers to split")
    if not 0 < quantile < 1:
        raise ValueError("quantile must lie in (0, 1)")
    values = np.sort(np.fromiter(counts.values(), dtype=np.int64, count=len(counts)))
    total = values.size
    # tail share only changes just above each distinct count, so candidates are v + 1
    threshold = int(values[-1]) + 1
    for v in np.unique(values):
        tail = total - int(np.searchsorted(values, v, side="right"))
        if tail / total <= quantile:
            threshold = int(v) + 1
            break
    hf = frozenset(p for p, c in counts.items() if c >= threshold)
    lf = frozenset(p for p, c in counts.items() if c < threshold)
    return FrequencySplit(dict(counts), threshold, quantile, hf, lf, window)


def cumulative_frequency(counts: Mapping[str, int]) -> list[tuple[int, int, float]]:
    """Rows ``(trip_count, passengers, cumulative_fraction)`` in ascending trip count."""
    c = Counter(counts.values())
    total = sum(c.values())
    rows, acc = [], 0
    for k in sorted(c):
        acc += c[k]
        rows.append((k, c[k], acc / total))
    return rows


@dataclass
class TimeSlotFlow:
    counts: np.ndarray = field(default_factory=lambda: np.zeros(12, dtype=np.int64))
    labels: tuple[str, ...] = SLOT_LABELS

    @property
    def normalized(self) -> np.ndarray:
        return np.asarray(normalize_slots(self.counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def slot_index(ts: datetime) -> int:
    return ts.hour // 2


def bin_time_slots(events: Iterable[TravelChain | datetime], window: Window | None = None) -> TimeSlotFlow:
    """Histogram of first swipes over the twelve two-hour slots of the day."""
    counts = np.zeros(12, dtype=np.int64)
    for ev in events:
        ts = ev.start if isinstance(ev, TravelChain) else ev
        if window is None or ts in window:
            counts[ts.hour // 2] += 1
    return TimeSlotFlow(counts)


def normalize_slots(series: Sequence[float]) -> list[float]:
    """Min-max scale a series onto [0, 1]."""
    x = np.asarray(series, dtype=np.float64)
    if x.size < 2:
        raise ConstantSeries("need at least two values")
    lo, hi = x.min(), x.max()
    if hi == lo:
        raise ConstantSeries("series is constant")
    return ((x - lo) / (hi - lo)).tolist()


def normalize_slot_table(columns: Mapping[str, Sequence[float]]) -> dict[str, list[float]]:
    """Min-max scale several slot series with one shared min and max.

    This keeps cohorts of different sizes comparable on one axis.
    """
    names = list(columns)
    flat = np.concatenate([np.asarray(columns[n], dtype=np.float64) for n in names])
    if flat.size < 2:
        raise ConstantSeries("need at least two values")
    lo, hi = flat.min(), flat.max()
    if hi == lo:
        raise ConstantSeries("table is constant")
    return {n: ((np.asarray(columns[n], dtype=np.float64) - lo) / (hi - lo)).tolist() for n in names}
