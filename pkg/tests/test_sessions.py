"""Session model, slot arithmetic and ingestion."""

import io
from datetime import date, datetime, time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evcharge.sessions import (ChargingSession, SessionHistory, SlotClock, group_by_day,
                               parse_sessions_csv, parse_sessions_json, slot_of,
                               sessions_to_csv_text)

CSV_HEADER = "session_id,arrival,departure,requested_kwh,user_stated_departure\n"


class TestSlotClock:
    def test_default_grid(self):
        clock = SlotClock()
        assert clock.cycle_minutes == 10
        assert clock.slots_per_day == 144

    def test_cycle_must_divide_day(self):
        with pytest.raises(ValueError):
            SlotClock(7)

    def test_slot_of_first_and_last(self, clock):
        assert slot_of(time(0, 0), clock) == 1
        assert slot_of(time(23, 59), clock) == 144

    def test_slot_of_mid_morning(self, clock):
        # 08:05 is minute 485, floor(485/10) + 1
        assert slot_of(time(8, 5), clock) == 49

    @given(st.integers(min_value=0, max_value=143), st.floats(min_value=0, max_value=9.99))
    def test_roundtrip_and_monotone(self, s, offset):
        clock = SlotClock(10)
        midpoint = time(hour=(s * 10 + 5) // 60, minute=(s * 10 + 5) % 60)
        assert slot_of(midpoint, clock) == s + 1
        m = s * 10 + offset
        t = time(int(m // 60), int(m % 60), int((m % 1) * 60))
        assert slot_of(t, clock) == s + 1

    def test_surjective_over_day(self, clock):
        labels = {slot_of(time(h, m), clock) for h in range(24) for m in range(60)}
        assert labels == set(range(1, 145))


class TestChargingSession:
    def test_slots_use_floor_convention(self, clock, session_factory):
        s = session_factory(arrival="08:00", departure="16:00", kwh=7.0)
        assert s.arrival_slot(clock) == 48
        assert s.departure_slot(clock) == 96

    def test_rejects_departure_before_arrival(self, session_factory):
        with pytest.raises(ValueError):
            session_factory(arrival="16:00", departure="08:00")

    def test_truncates_at_midnight(self):
        s = ChargingSession("x", datetime(2021, 1, 4, 22, 0),
                            datetime(2021, 1, 5, 6, 0), 5.0).truncate_to_day()
        assert s.truncated
        assert s.departure_minute == 1440
        assert s.departure_slot(SlotClock()) == 144

    def test_weekend_tagging(self):
        sat = ChargingSession("w", datetime(2021, 1, 9, 8, 0),
                              datetime(2021, 1, 9, 12, 0), 3.0)
        mon = ChargingSession("m", datetime(2021, 1, 4, 8, 0),
                              datetime(2021, 1, 4, 12, 0), 3.0)
        assert sat.is_weekend and not mon.is_weekend

    def test_stated_departure_defaults_to_actual(self, session_factory):
        s = session_factory(departure="15:00")
        assert s.stated_departure_minute == s.departure_minute
        biased = session_factory(departure="15:00", stated="17:00")
        assert biased.stated_departure_minute == 17 * 60


class TestParsing:
    def test_parse_basic_row(self, clock):
        text = CSV_HEADER + "a,2021-01-04T08:00:00,2021-01-04T16:00:00,7.0,\n"
        sessions, issues = parse_sessions_csv(io.StringIO(text))
        assert not issues
        (s,) = sessions
        assert s.arrival_slot(clock) == 48 and s.departure_slot(clock) == 96
        assert s.requested_kwh == 7.0

    def test_empty_file(self):
        sessions, issues = parse_sessions_csv(io.StringIO(""))
        assert sessions == [] and issues == []

    def test_departure_equal_arrival_rejected_with_line(self):
        text = CSV_HEADER + "a,2021-01-04T08:00:00,2021-01-04T08:00:00,7.0,\n"
        sessions, issues = parse_sessions_csv(io.StringIO(text))
        assert sessions == []
        assert len(issues) == 1 and issues[0].line == 2

    def test_bad_timestamp_reported_but_others_parsed(self):
        text = (CSV_HEADER
                + "a,not-a-time,2021-01-04T16:00:00,7.0,\n"
                + "b,2021-01-04T09:00:00,2021-01-04T12:00:00,4.5,\n")
        sessions, issues = parse_sessions_csv(io.StringIO(text))
        assert [s.session_id for s in sessions] == ["b"]
        assert issues[0].line == 2

    def test_sorted_by_arrival(self):
        text = (CSV_HEADER
                + "late,2021-01-04T10:00:00,2021-01-04T12:00:00,1,\n"
                + "early,2021-01-04T08:00:00,2021-01-04T12:00:00,1,\n")
        sessions, _ = parse_sessions_csv(io.StringIO(text))
        assert [s.session_id for s in sessions] == ["early", "late"]

    def test_json_equivalent(self):
        text = ('[{"session_id": "a", "arrival": "2021-01-04T08:00:00", '
                '"departure": "2021-01-04T16:00:00", "requested_kwh": 7.0}]')
        sessions, issues = parse_sessions_json(io.StringIO(text))
        assert not issues and sessions[0].session_id == "a"

    def test_zulu_timestamps_accepted(self):
        text = CSV_HEADER + "a,2021-01-04T08:00:00Z,2021-01-04T16:00:00Z,7.0,\n"
        sessions, issues = parse_sessions_csv(io.StringIO(text))
        assert not issues and sessions[0].arrival_minute == 480

    def test_parse_serialize_parse_identity(self, session_factory):
        originals = [
            session_factory("a", "08:00", "16:00", 7.25),
            session_factory("b", "09:30", "14:00", 3.5, stated="15:00"),
        ]
        text = sessions_to_csv_text(originals)
        reparsed, issues = parse_sessions_csv(io.StringIO(text))
        assert not issues
        assert reparsed == originals


class TestHistory:
    def test_window_keeps_most_recent(self, session_factory):
        history = SessionHistory(window_size=3)
        days = [date(2021, 1, d) for d in (4, 5, 6, 7)]
        history.extend([session_factory(f"s{i}", day=d) for i, d in enumerate(days)])
        window = history.window()
        assert len(window) == 3
        assert window[0].day == date(2021, 1, 5)

    def test_daily_counts_by_type(self, session_factory):
        history = SessionHistory()
        history.extend([
            session_factory("m1", day=date(2021, 1, 4)),
            session_factory("m2", day=date(2021, 1, 4)),
            session_factory("s1", day=date(2021, 1, 9)),
        ])
        assert history.daily_counts(weekend=False) == [(date(2021, 1, 4), 2)]
        assert history.daily_counts(weekend=True) == [(date(2021, 1, 9), 1)]

    def test_group_by_day(self, session_factory):
        sessions = [session_factory("a", day=date(2021, 1, 5)),
                    session_factory("b", day=date(2021, 1, 4))]
        grouped = group_by_day(sessions)
        assert list(grouped) == [date(2021, 1, 4), date(2021, 1, 5)]
