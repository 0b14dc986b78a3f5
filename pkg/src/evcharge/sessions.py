"""Charging-session data model, slot-clock arithmetic and ACN-style ingestion.

A day is divided into fixed charge cycles (10 minutes by default, 144 per
day).  Sessions carry grid slot indices in the 0-based "floor" convention:
``arrival_slot = floor(minutes_of_day / cycle_minutes)``.  An EV is treated
as present during slots ``[arrival_slot, departure_slot)`` and must be fully
charged by the start of its departure slot.  :func:`slot_of` exposes the
human-facing 1-based slot label for a time of day.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta
from typing import Iterable, Sequence

MINUTES_PER_DAY = 24 * 60

CSV_COLUMNS = ("session_id", "arrival", "departure", "requested_kwh", "user_stated_departure")


@dataclass(frozen=True)
class SlotClock:
    """Fixed decision grid over one day."""

    cycle_minutes: int = 10

    def __post_init__(self):
        if self.cycle_minutes <= 0 or MINUTES_PER_DAY % self.cycle_minutes != 0:
            raise ValueError(
                f"cycle_minutes must divide {MINUTES_PER_DAY} evenly, got {self.cycle_minutes}"
            )

    @property
    def slots_per_day(self) -> int:
        return MINUTES_PER_DAY // self.cycle_minutes

    @property
    def cycle_hours(self) -> float:
        return self.cycle_minutes / 60.0

    def grid_slot(self, minute_of_day: float) -> int:
        """0-based index of the slot containing a minute of day.

        Minute 1440 (exact end of day) maps to slots_per_day, one past the
        last slot, so a day-end departure is "present through the last slot".
        """
        if minute_of_day < 0 or minute_of_day > MINUTES_PER_DAY:
            raise ValueError(f"minute_of_day outside [0, {MINUTES_PER_DAY}]: {minute_of_day}")
        return min(int(minute_of_day // self.cycle_minutes), self.slots_per_day)

    def slot_start_minute(self, grid_slot: int) -> float:
        return grid_slot * self.cycle_minutes


def minute_of_day(t: datetime | time) -> float:
    """Minutes since midnight, fractional seconds included."""
    if isinstance(t, datetime):
        t = t.time()
    return t.hour * 60 + t.minute + t.second / 60.0 + t.microsecond / 6e7


def slot_of(t: datetime | time, clock: SlotClock) -> int:
    """1-based slot label in {1..slots_per_day} for a time of day.

    Slot s covers [(s-1)*cycle, s*cycle) minutes: 00:00 is slot 1, 23:59 is
    the last slot.
    """
    m = minute_of_day(t)
    return min(int(m // clock.cycle_minutes), clock.slots_per_day - 1) + 1


@dataclass
class ChargingSession:
    """One EV visit: arrival and departure times plus the requested energy."""

    session_id: str
    arrival: datetime
    departure: datetime
    requested_kwh: float
    user_stated_departure: datetime | None = None
    truncated: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.departure <= self.arrival:
            raise ValueError(
                f"session {self.session_id!r}: departure must be after arrival"
            )
        if self.requested_kwh < 0:
            raise ValueError(f"session {self.session_id!r}: requested_kwh must be >= 0")

    @property
    def day(self) -> date:
        return self.arrival.date()

    @property
    def is_weekend(self) -> bool:
        return self.arrival.weekday() >= 5

    @property
    def arrival_minute(self) -> float:
        return minute_of_day(self.arrival)

    @property
    def departure_minute(self) -> float:
        """Departure as minutes into the arrival day; 1440 when truncated at day end."""
        days_over = (self.departure.date() - self.arrival.date()).days
        if days_over > 0:
            return float(MINUTES_PER_DAY)
        return minute_of_day(self.departure)

    @property
    def stated_departure_minute(self) -> float:
        """Stated departure (minutes into arrival day), actual when not supplied."""
        stated = self.user_stated_departure
        if stated is None:
            return self.departure_minute
        days_over = (stated.date() - self.arrival.date()).days
        if days_over > 0:
            return float(MINUTES_PER_DAY)
        return max(minute_of_day(stated), self.arrival_minute)

    def arrival_slot(self, clock: SlotClock) -> int:
        return clock.grid_slot(self.arrival_minute)

    def departure_slot(self, clock: SlotClock) -> int:
        return clock.grid_slot(self.departure_minute)

    def stated_departure_slot(self, clock: SlotClock) -> int:
        return clock.grid_slot(self.stated_departure_minute)

    def truncate_to_day(self) -> "ChargingSession":
        """Clip a midnight-spanning session at the end of its arrival day."""
        if self.departure.date() == self.arrival.date():
            return self
        day_end = datetime.combine(self.arrival.date() + timedelta(days=1), time(0, 0))
        return replace(self, departure=day_end, truncated=True)


@dataclass
class SessionIssue:
    """Diagnostic for one rejected input record."""

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass
class SessionHistory:
    """Rolling store of past sessions used to train the stochastic models."""

    sessions: list[ChargingSession] = field(default_factory=list)
    window_size: int = 500

    def extend(self, new_sessions: Iterable[ChargingSession]) -> None:
        self.sessions.extend(new_sessions)
        self.sessions.sort(key=lambda s: s.arrival)

    def window(self) -> list[ChargingSession]:
        """The min(window_size, available) most recent sessions."""
        return self.sessions[-self.window_size:]

    def daily_counts(self, weekend: bool) -> list[tuple[date, int]]:
        """Arrival counts per calendar day of the requested day type, oldest first."""
        counts: dict[date, int] = {}
        for s in self.sessions:
            if s.is_weekend == weekend:
                counts[s.day] = counts.get(s.day, 0) + 1
        return sorted(counts.items())


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        dt = dt.replace(tzinfo=None)
    return dt


def _build_session(raw: dict, line: int, issues: list[SessionIssue]) -> ChargingSession | None:
    sid = str(raw.get("session_id", "") or f"row{line}")
    try:
        arrival = _parse_timestamp(str(raw["arrival"]))
        departure = _parse_timestamp(str(raw["departure"]))
    except (KeyError, ValueError) as exc:
        issues.append(SessionIssue(line, f"unparseable timestamp ({exc})"))
        return None
    try:
        kwh = float(raw["requested_kwh"])
    except (KeyError, TypeError, ValueError):
        issues.append(SessionIssue(line, "missing or non-numeric requested_kwh"))
        return None
    stated_raw = raw.get("user_stated_departure")
    stated = None
    if stated_raw not in (None, ""):
        try:
            stated = _parse_timestamp(str(stated_raw))
        except ValueError:
            issues.append(SessionIssue(line, "unparseable user_stated_departure"))
            return None
    if departure <= arrival:
        issues.append(SessionIssue(line, f"session {sid!r}: departure <= arrival, rejected"))
        return None
    if kwh < 0:
        issues.append(SessionIssue(line, f"session {sid!r}: negative requested_kwh, rejected"))
        return None
    return ChargingSession(sid, arrival, departure, kwh, stated).truncate_to_day()


def parse_sessions_csv(source) -> tuple[list[ChargingSession], list[SessionIssue]]:
    """Read ACN-style session records from a CSV path or file object.

    Expected columns: session_id, arrival, departure, requested_kwh and an
    optional user_stated_departure, ISO-8601 timestamps.  Returns the valid
    sessions sorted by arrival plus per-record issues (with line numbers)
    for everything that was rejected.
    """
    if isinstance(source, (str,)) or hasattr(source, "__fspath__"):
        with open(source, newline="") as fh:
            return parse_sessions_csv(fh)
    reader = csv.DictReader(source)
    sessions: list[ChargingSession] = []
    issues: list[SessionIssue] = []
    if reader.fieldnames is None:
        return sessions, issues
    missing = {"session_id", "arrival", "departure", "requested_kwh"} - set(reader.fieldnames)
    if missing:
        issues.append(SessionIssue(1, f"missing required columns: {sorted(missing)}"))
        return sessions, issues
    for record in reader:
        session = _build_session(record, reader.line_num, issues)
        if session is not None:
            sessions.append(session)
    sessions.sort(key=lambda s: s.arrival)
    return sessions, issues


def parse_sessions_json(source) -> tuple[list[ChargingSession], list[SessionIssue]]:
    """Read sessions from a JSON array of objects with the CSV field names."""
    if isinstance(source, (str,)) or hasattr(source, "__fspath__"):
        with open(source) as fh:
            return parse_sessions_json(fh)
    data = json.load(source)
    if not isinstance(data, list):
        raise ValueError("expected a JSON array of session objects")
    sessions: list[ChargingSession] = []
    issues: list[SessionIssue] = []
    for idx, record in enumerate(data, start=1):
        session = _build_session(record, idx, issues)
        if session is not None:
            sessions.append(session)
    sessions.sort(key=lambda s: s.arrival)
    return sessions, issues


def write_sessions_csv(sessions: Sequence[ChargingSession], target) -> None:
    """Serialize sessions in the ingestion CSV schema (parse round-trips)."""
    if isinstance(target, (str,)) or hasattr(target, "__fspath__"):
        with open(target, "w", newline="") as fh:
            write_sessions_csv(sessions, fh)
            return
    writer = csv.writer(target)
    writer.writerow(CSV_COLUMNS)
    for s in sessions:
        writer.writerow([
            s.session_id,
            s.arrival.isoformat(),
            s.departure.isoformat(),
            repr(s.requested_kwh),
            s.user_stated_departure.isoformat() if s.user_stated_departure else "",
        ])


def sessions_to_csv_text(sessions: Sequence[ChargingSession]) -> str:
    buf = io.StringIO()
    write_sessions_csv(sessions, buf)
    return buf.getvalue()


def group_by_day(sessions: Iterable[ChargingSession]) -> dict[date, list[ChargingSession]]:
    """Sessions bucketed by arrival date, each bucket sorted by arrival."""
    days: dict[date, list[ChargingSession]] = {}
    for s in sessions:
        days.setdefault(s.day, []).append(s)
    for bucket in days.values():
        bucket.sort(key=lambda s: s.arrival)
    return dict(sorted(days.items()))
