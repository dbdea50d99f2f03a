"""Record cleaning and travel-chain assembly."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Sequence

from .ingest import Leg, SmartCardRecord

EARTH_RADIUS_KM = 6371.0088

# reject reason codes, in the order the rules are checked
ILLOGICAL_SEQUENCE = "IllogicalSequence"
OUT_OF_WINDOW = "OutOfWindow"
SIMULTANEOUS_SWIPE = "SimultaneousSwipe"
IMPLAUSIBLE_SPEED = "ImplausibleSpeed"
REASONS = (ILLOGICAL_SEQUENCE, OUT_OF_WINDOW, SIMULTANEOUS_SWIPE, IMPLAUSIBLE_SPEED)


@dataclass(frozen=True, slots=True)
class TravelChain:
    passenger_id: str
    legs: tuple[Leg, ...]

    def __post_init__(self):
        if not self.legs:
            raise ValueError("a chain needs at least one leg")

    @property
    def date(self):
        return self.legs[0].timestamp.date()

    @property
    def start(self) -> datetime:
        return self.legs[0].timestamp

    @property
    def duration(self) -> timedelta:
        return self.legs[-1].timestamp - self.legs[0].timestamp


def haversine_km(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    a = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(math.radians(lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, a)))


def _record_key(r: SmartCardRecord):
    return (r.passenger_id, r.timestamp)


def dedup_records(records: Iterable[SmartCardRecord]) -> tuple[list[SmartCardRecord], int]:
    """Drop exact duplicates (first occurrence wins), then sort stably by passenger and time."""
    records = list(records)
    unique = list(dict.fromkeys(records))
    unique.sort(key=_record_key)
    return unique, len(records) - len(unique)


@dataclass
class FlawRules:
    """Thresholds for :func:`filter_flawed`.

    ``window_end`` is exclusive. Stations missing from ``station_coords`` skip
    the speed rule.
    """

    window_start: datetime | None = datetime(2018, 3, 1)
    window_end: datetime | None = datetime(2018, 4, 1)
    max_speed_kmh: float = 120.0
    station_coords: Mapping[str, tuple[float, float]] | None = None


def filter_flawed(
    records: Iterable[SmartCardRecord], rules: FlawRules | None = None
) -> tuple[list[SmartCardRecord], list[tuple[SmartCardRecord, str]]]:
    """Split records into survivors and ``(record, reason)`` rejects.

    Speed and simultaneity are judged against the passenger's previous
    surviving swipe, so one bad swipe does not take its neighbours down too.
    """
    rules = rules or FlawRules()
    coords = rules.station_coords or {}
    kept: list[SmartCardRecord] = []
    rejects: list[tuple[SmartCardRecord, str]] = []
    prev: SmartCardRecord | None = None
    for r in sorted(records, key=_record_key):
        if prev is not None and prev.passenger_id != r.passenger_id:
            prev = None
        reason = None
        if r.station_seq < 0:
            reason = ILLOGICAL_SEQUENCE
        elif (rules.window_start is not None and r.timestamp < rules.window_start) or (
            rules.window_end is not None and r.timestamp >= rules.window_end
        ):
            reason = OUT_OF_WINDOW
        elif prev is not None:
            dt = (r.timestamp - prev.timestamp).total_seconds()
            a = coords.get(prev.station_name)
            b = coords.get(r.station_name)
            dist = haversine_km(a[0], a[1], b[0], b[1]) if a is not None and b is not None else None
            if dt <= 0 and not dist:
                reason = SIMULTANEOUS_SWIPE
            elif dist is not None and (dt <= 0 or dist / (dt / 3600.0) > rules.max_speed_kmh):
                reason = IMPLAUSIBLE_SPEED
        if reason is None:
            kept.append(r)
            prev = r
        else:
            rejects.append((r, reason))
    return kept, rejects


def assemble_chains(
    records: Iterable[SmartCardRecord],
    gap: timedelta = timedelta(minutes=60),
    max_duration: timedelta = timedelta(hours=6),
    require_min_legs: int = 2,
) -> tuple[list[TravelChain], list[TravelChain]]:
    """Group each passenger's swipes into chains.

    A new chain starts when the wait since the previous swipe exceeds ``gap``
    or the chain would outgrow ``max_duration``. Returns ``(chains, incomplete)``
    where ``incomplete`` holds the removed chains with fewer than
    ``require_min_legs`` legs.
    """
    chains: list[TravelChain] = []
    incomplete: list[TravelChain] = []

    def close(pid, legs):
        c = TravelChain(pid, tuple(legs))
        (chains if len(legs) >= require_min_legs else incomplete).append(c)

    pid = None
    legs: list[Leg] = []
    for r in sorted(records, key=_record_key):
        if legs and (
            r.passenger_id != pid
            or r.timestamp <= legs[-1].timestamp
            or r.timestamp - legs[-1].timestamp > gap
            or r.timestamp - legs[0].timestamp > max_duration
        ):
            close(pid, legs)
            legs = []
        pid = r.passenger_id
        legs.append(r.leg)
    if legs:
        close(pid, legs)
    return chains, incomplete


@dataclass
class CleaningConfig:
    gap: timedelta = timedelta(minutes=60)
    max_duration: timedelta = timedelta(hours=6)
    require_min_legs: int = 2
    rules: FlawRules = field(default_factory=FlawRules)


@dataclass
class CleaningReport:
    input_count: int = 0
    duplicates_removed: int = 0
    flawed_removed: dict[str, int] = field(default_factory=dict)
    incomplete_chains_removed: int = 0
    incomplete_records_removed: int = 0
    output_count: int = 0
    chain_count: int = 0

    @property
    def balanced(self) -> bool:
        removed = self.duplicates_removed + sum(self.flawed_removed.values()) + self.incomplete_records_removed
        return self.input_count == self.output_count + removed

    def merge(self, other: "CleaningReport") -> "CleaningReport":
        flawed = dict(self.flawed_removed)
        for k, v in other.flawed_removed.items():
            flawed[k] = flawed.get(k, 0) + v
        return CleaningReport(
            self.input_count + other.input_count,
            self.duplicates_removed + other.duplicates_removed,
            flawed,
            self.incomplete_chains_removed + other.incomplete_chains_removed,
            self.incomplete_records_removed + other.incomplete_records_removed,
            self.output_count + other.output_count,
            self.chain_count + other.chain_count,
        )

    def as_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "duplicates_removed": self.duplicates_removed,
            "flawed_removed": {r: self.flawed_removed.get(r, 0) for r in REASONS},
            "incomplete_chains_removed": self.incomplete_chains_removed,
            "incomplete_records_removed": self.incomplete_records_removed,
            "output_count": self.output_count,
            "chain_count": self.chain_count,
        }


def clean(
    records: Sequence[SmartCardRecord], config: CleaningConfig | None = None
) -> tuple[list[TravelChain], CleaningReport, list[tuple[SmartCardRecord, str]]]:
    """Dedup, filter and assemble; returns chains, the balanced report and the rejects."""
    config = config or CleaningConfig()
    unique, dups = dedup_records(records)
    kept, rejects = filter_flawed(unique, config.rules)
    chains, incomplete = assemble_chains(kept, config.gap, config.max_duration, config.require_min_legs)
    by_reason: dict[str, int] = {}
    for _, reason in rejects:
        by_reason[reason] = by_reason.get(reason, 0) + 1
    report = CleaningReport(
        input_count=len(records),
        duplicates_removed=dups,
        flawed_removed=by_reason,
        incomplete_chains_removed=len(incomplete),
        incomplete_records_removed=sum(len(c.legs) for c in incomplete),
        output_count=sum(len(c.legs) for c in chains),
        chain_count=len(chains),
    )
    assert report.balanced, report
    return chains, report, rejects
