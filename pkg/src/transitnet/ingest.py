"""Parsing of smart-card record files and station coordinate catalogs."""
from __future__ import annotations

import csv
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import BadCoordinate, BadTimestamp, IngestError, MalformedLeg, MalformedRow, UnknownMode

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    SUBWAY = "DT"
    BUS = "GJ"

    @classmethod
    def parse(cls, code: str) -> "Mode":
        try:
            return _MODES[code.strip().upper()]
        except KeyError:
            raise UnknownMode(f"unknown mode code {code!r}") from None


_MODES = {m.value: m for m in Mode}


@dataclass(frozen=True, slots=True)
class Leg:
    mode: Mode
    line: str
    station_seq: int
    station_name: str
    timestamp: datetime


@dataclass(frozen=True, slots=True)
class SmartCardRecord:
    passenger_id: str
    mode: Mode
    line: str
    station_seq: int
    station_name: str
    timestamp: datetime

    @property
    def leg(self) -> Leg:
        return Leg(self.mode, self.line, self.station_seq, self.station_name, self.timestamp)


def parse_timestamp(text: str) -> datetime:
    """Parse a 14-digit ``YYYYMMDDHHMMSS`` stamp into a naive datetime."""
    s = text.strip()
    if len(s) != 14 or not s.isdigit() or not s.isascii():
        raise BadTimestamp(f"timestamp must be 14 digits, got {text!r}")
    try:
        return datetime(int(s[:4]), int(s[4:6]), int(s[6:8]), int(s[8:10]), int(s[10:12]), int(s[12:14]))
    except ValueError as exc:
        raise BadTimestamp(f"invalid timestamp {text!r}: {exc}") from None


def format_timestamp(ts: datetime) -> str:
    return ts.strftime("%Y%m%d%H%M%S")


def _is_timestamp(text: str) -> bool:
    s = text.strip()
    return len(s) == 14 and s.isdigit()


def _parse_int(text: str, what: str, exc=MalformedRow) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise exc(f"{what} is not an integer: {text!r}") from None


def _leg_from_fields(f: Sequence[str], exc) -> Leg:
    mode, line, seq, name, ts = f
    line = line.strip()
    name = name.strip()
    if not line or not name:
        raise exc("line and station name must be non-empty")
    return Leg(Mode.parse(mode), sys.intern(line), _parse_int(seq, "station_seq", exc), sys.intern(name), parse_timestamp(ts))


def split_fields(fields: Sequence[str]) -> tuple[list[str], bool]:
    """Reduce a record row to its six canonical fields.

    Returns the fields and whether an unexplained extra numeric column between
    line and station number was dropped.
    """
    f = list(fields)
    extra = False
    if len(f) == 8 or (len(f) == 7 and _is_timestamp(f[6])):
        # passenger, mode, line, <extra>, seq, name, ts[, marker]
        if not f[3].strip().lstrip("-").isdigit():
            raise MalformedRow(f"{len(f)} columns but the extra field is not numeric")
        del f[7:]
        del f[3]
        extra = True
    elif len(f) == 7:
        del f[6]  # next-travel-chain marker
    if len(f) != 6:
        raise MalformedRow(f"expected 6 columns, got {len(fields)}")
    return f, extra


def _record_from_six(f: Sequence[str]) -> SmartCardRecord:
    pid = f[0].strip()
    if not pid:
        raise MalformedRow("empty passenger id")
    leg = _leg_from_fields(f[1:], MalformedRow)
    return SmartCardRecord(sys.intern(pid), leg.mode, leg.line, leg.station_seq, leg.station_name, leg.timestamp)


def parse_fields(fields: Sequence[str]) -> SmartCardRecord:
    f, extra = split_fields(fields)
    if extra:
        logger.debug("dropped extra numeric column in row for %s", f[0])
    return _record_from_six(f)


def parse_record(line: str, delimiter: str = ",") -> SmartCardRecord:
    """Parse one delimited record row.

    >>> parse_record("770fdeffe6154df9a2f631027035,DT,6,49,Jintai Road,20180301090700").station_name
    'Jintai Road'
    """
    line = line.rstrip("\r\n")
    if not line.strip():
        raise MalformedRow("empty row")
    return parse_fields(line.split(delimiter))


def format_record(rec: SmartCardRecord, delimiter: str = ",") -> str:
    return delimiter.join(
        [rec.passenger_id, rec.mode.value, rec.line, str(rec.station_seq), rec.station_name, format_timestamp(rec.timestamp)]
    )


def parse_chain_leg(field_group: str | Sequence[str], delimiter: str = ",") -> Leg:
    """Parse a five-field chain leg ``mode,line,seq,name,timestamp``.

    A six-field variant with an extra numeric column after the line code is
    accepted and the extra column dropped.
    """
    f = field_group.split(delimiter) if isinstance(field_group, str) else list(field_group)
    if len(f) == 6 and _is_timestamp(f[5]) and f[2].strip().isdigit():
        logger.debug("dropped extra numeric column in leg %r", f)
        del f[2]
    if len(f) != 5:
        raise MalformedLeg(f"a leg has 5 fields, got {len(f)}")
    return _leg_from_fields(f, MalformedLeg)


def format_leg(leg: Leg, delimiter: str = ",") -> str:
    return delimiter.join([leg.mode.value, leg.line, str(leg.station_seq), leg.station_name, format_timestamp(leg.timestamp)])


def split_chain_fields(fields: Sequence[str]) -> list[list[str]]:
    """Group the fields following a passenger id into leg field groups."""
    groups = []
    i = 0
    n = len(fields)
    while i < n:
        if n - i >= 6 and not _is_timestamp(fields[i + 4]) and _is_timestamp(fields[i + 5]):
            groups.append(list(fields[i:i + 6]))
            i += 6
        else:
            groups.append(list(fields[i:i + 5]))
            i += 5
    return groups


@dataclass
class RejectLog:
    """Rows that failed to parse, plus a count of tolerated oddities."""

    rejects: list[tuple[int, str, str]] = field(default_factory=list)  # (line_no, reason, raw)
    extra_field_rows: int = 0

    def reason_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _, reason, _ in self.rejects:
            out[reason] = out.get(reason, 0) + 1
        return out


_HEADER_IDS = {"passenger_id", "passengers id", "passenger id", "passengerid"}


def iter_records(lines: Iterable[str], delimiter: str = ",", log: RejectLog | None = None) -> Iterator[SmartCardRecord]:
    """Parse record lines, skipping a header and collecting rejects into ``log``."""
    log = log if log is not None else RejectLog()
    for no, raw in enumerate(lines, 1):
        raw = raw.rstrip("\r\n")
        if no == 1 and raw.split(delimiter, 1)[0].strip().lower() in _HEADER_IDS:
            continue
        if not raw.strip():
            log.rejects.append((no, "MalformedRow", raw))
            continue
        try:
            fields, extra = split_fields(raw.split(delimiter))
            rec = _record_from_six(fields)
        except IngestError as exc:
            log.rejects.append((no, type(exc).__name__, raw))
            continue
        if extra:
            log.extra_field_rows += 1
        yield rec


def read_records(path: str | Path, delimiter: str = ",") -> tuple[list[SmartCardRecord], RejectLog]:
    log = RejectLog()
    with open(path, encoding="utf-8", newline="") as fh:
        records = list(iter_records(fh, delimiter, log))
    if log.extra_field_rows:
        logger.warning("%s: %d rows carried an unexplained extra numeric column", path, log.extra_field_rows)
    if log.rejects:
        logger.warning("%s: %d rows rejected %s", path, len(log.rejects), log.reason_counts())
    return records, log


# stations


@dataclass(frozen=True, slots=True)
class StationEntry:
    station_id: int
    station_name: str
    longitude: float
    latitude: float
    mode: Mode | None = None


@dataclass
class StationCatalog:
    entries: tuple[StationEntry, ...]

    def __post_init__(self):
        ids = [e.station_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise BadCoordinate("station ids must be unique")
        self._by_id = {e.station_id: e for e in self.entries}
        self._by_name: dict[str, StationEntry] = {}
        for e in self.entries:
            self._by_name.setdefault(e.station_name, e)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_id(self, station_id: int) -> StationEntry:
        return self._by_id[station_id]

    def by_name(self, name: str) -> StationEntry | None:
        """First entry (catalog order) carrying ``name``; names may repeat."""
        return self._by_name.get(name)

    def name_coordinates(self) -> dict[str, tuple[float, float]]:
        return {name: (e.longitude, e.latitude) for name, e in self._by_name.items()}


def _coord(value, lo, hi, what) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise BadCoordinate(f"{what} is not numeric: {value!r}") from None
    if not (lo <= x <= hi):  # also rejects NaN
        raise BadCoordinate(f"{what} {x} outside [{lo}, {hi}]")
    return x


def _row_values(row) -> tuple:
    if isinstance(row, Mapping):
        get = lambda *keys: next((row[k] for k in keys if k in row and row[k] not in (None, "")), None)  # noqa: E731
        return (
            get("station_id", "stop_id", "id"),
            get("station_name", "stop_name", "name"),
            get("longitude", "lon"),
            get("latitude", "lat"),
            get("mode"),
        )
    row = list(row)
    if len(row) not in (3, 4):
        raise BadCoordinate(f"station row needs name, longitude, latitude[, mode]; got {row!r}")
    return (None, row[0], row[1], row[2], row[3] if len(row) == 4 else None)


def load_station_catalog(rows: Iterable) -> StationCatalog:
    """Build a catalog from (name, lon, lat[, mode]) tuples or mappings.

    Missing ids are assigned sequentially after the largest explicit id seen
    so far. Repeated (name, lon, lat) triples collapse to their first entry.
    """
    entries = []
    seen = set()
    next_id = 0
    for row in rows:
        sid, name, lon, lat, mode = _row_values(row)
        name = (name or "").strip()
        if not name:
            raise BadCoordinate("station row without a name")
        x = _coord(lon, -180.0, 180.0, "longitude")
        y = _coord(lat, -90.0, 90.0, "latitude")
        key = (name, x, y)
        if key in seen:
            continue
        seen.add(key)
        if sid is None:
            sid = next_id
        else:
            sid = int(sid)
        next_id = max(next_id, sid + 1)
        entries.append(StationEntry(sid, name, x, y, Mode.parse(mode) if mode else None))
    return StationCatalog(tuple(entries))


STATION_COLUMNS = ("station_name", "longitude", "latitude", "mode")


def read_station_file(path: str | Path, delimiter: str = ",") -> StationCatalog:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        return StationCatalog(())
    first = rows[0]
    header = None
    try:
        float(first[1])
    except (IndexError, ValueError):
        header = [c.strip().lower() for c in first]
        rows = rows[1:]
    if header:
        return load_station_catalog(dict(zip(header, r)) for r in rows)
    return load_station_catalog(rows)


def write_station_file(path: str | Path, catalog: StationCatalog, delimiter: str = ",") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(("station_id",) + STATION_COLUMNS)
        for e in catalog:
            w.writerow((e.station_id, e.station_name, repr(e.longitude), repr(e.latitude), e.mode.value if e.mode else ""))
