"""Shared fixtures: clocks, battery parameters, price curves, small corpora."""

from datetime import date, datetime

import pytest

from evcharge.battery import BMSParams
from evcharge.economic import PricingSchedule
from evcharge.sessions import ChargingSession, SessionHistory, SlotClock
from evcharge.synthetic import SyntheticProfile, generate_days


@pytest.fixture
def clock():
    return SlotClock(10)


@pytest.fixture
def paper_bms():
    """Station parameters of the evaluation setup (7.36 kW Level-2 ports)."""
    return BMSParams(p_ch_max=7.36, delta1=0.8, delta2=0.95, eta=0.95)


@pytest.fixture
def fig1_bms():
    """Parameters of the reference taper trace (7 kWh at 5 kW)."""
    return BMSParams(p_ch_max=5.0, delta1=0.8, delta2=0.97, eta=1.0)


@pytest.fixture
def flat_prices():
    # dyadic value: equal-cost ties stay exact ties in float arithmetic
    return PricingSchedule((0.125,) * 24)


@pytest.fixture
def tou_prices():
    hourly = [0.08] * 6 + [0.12] * 4 + [0.22] * 5 + [0.10] * 6 + [0.08] * 3
    return PricingSchedule(tuple(hourly))


def make_session(session_id="s", arrival="08:00", departure="16:00", kwh=7.0,
                 day=date(2021, 1, 4), stated=None):
    def at(hhmm):
        h, m = hhmm.split(":")
        return datetime(day.year, day.month, day.day, int(h), int(m))

    return ChargingSession(session_id, at(arrival), at(departure), kwh,
                           at(stated) if stated else None)


@pytest.fixture
def session_factory():
    return make_session


@pytest.fixture
def small_history():
    """Ten weekdays of synthetic sessions, enough to fit every model."""
    days = generate_days(date(2021, 1, 4), 10, seed=42,
                         profile=SyntheticProfile(), skip_weekends=True)
    history = SessionHistory()
    for sessions in days.values():
        history.extend(sessions)
    return history
