"""Synthetic charging-session generation for desk-scale experiments.

Arrivals follow an inhomogeneous Poisson process over the day, energy and
stay duration are sampled from clipped normal distributions, and the
user-stated departure can be biased/noised relative to the true one to
mimic unreliable user input.  Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

import numpy as np

from .sessions import MINUTES_PER_DAY, ChargingSession, SlotClock

#: Workplace-style default: arrivals concentrated in the morning, ~35/day.
DEFAULT_HOURLY_RATES = (
    0.0, 0.0, 0.0, 0.0, 0.0, 0.2,
    1.0, 6.0, 10.0, 8.0, 4.0, 2.0,
    1.5, 1.0, 0.5, 0.3, 0.3, 0.2,
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
)


@dataclass
class SyntheticProfile:
    """Arrival-rate curve plus energy and stay distributions."""

    hourly_rates: tuple[float, ...] = DEFAULT_HOURLY_RATES  # expected arrivals per hour
    energy_mean_kwh: float = 7.0
    energy_sd_kwh: float = 2.5
    energy_min_kwh: float = 1.0
    energy_max_kwh: float = 20.0
    stay_mean_minutes: float = 420.0
    stay_sd_minutes: float = 60.0
    stay_min_minutes: float = 60.0
    stated_bias_minutes: float = 0.0   # >0 means users claim to leave later than they do
    stated_noise_minutes: float = 0.0
    weekend_rate_scale: float = 0.3
    energy_step_kwh: float = 0.0       # >0 snaps requests to multiples of this

    def __post_init__(self):
        if len(self.hourly_rates) != 24:
            raise ValueError("hourly_rates must have 24 entries")
        if any(r < 0 for r in self.hourly_rates):
            raise ValueError("arrival rates must be non-negative")

    def rate_per_slot(self, clock: SlotClock, weekend: bool) -> np.ndarray:
        """Expected arrival count per grid slot."""
        hours = np.arange(clock.slots_per_day) * clock.cycle_minutes // 60
        rates = np.asarray(self.hourly_rates, dtype=float)[hours] * clock.cycle_hours
        if weekend:
            rates = rates * self.weekend_rate_scale
        return rates


@dataclass
class SyntheticConfig:
    profile: SyntheticProfile = field(default_factory=SyntheticProfile)
    clock: SlotClock = field(default_factory=SlotClock)
    skip_weekends: bool = False


def generate_day(day: date, seed: int, profile: SyntheticProfile | None = None,
                 clock: SlotClock | None = None) -> list[ChargingSession]:
    """Generate one day of sessions; identical output for identical arguments."""
    profile = profile or SyntheticProfile()
    clock = clock or SlotClock()
    rng = np.random.default_rng([seed, day.toordinal()])
    weekend = day.weekday() >= 5
    rates = profile.rate_per_slot(clock, weekend)
    midnight = datetime.combine(day, time(0, 0))

    sessions: list[ChargingSession] = []
    counts = rng.poisson(rates)
    serial = 0
    for slot_index in range(clock.slots_per_day):
        for _ in range(counts[slot_index]):
            arrival_minute = (slot_index + rng.random()) * clock.cycle_minutes
            stay = max(profile.stay_min_minutes,
                       rng.normal(profile.stay_mean_minutes, profile.stay_sd_minutes))
            departure_minute = min(arrival_minute + stay, float(MINUTES_PER_DAY))
            if departure_minute - arrival_minute < 1.0:
                continue
            kwh = float(np.clip(rng.normal(profile.energy_mean_kwh, profile.energy_sd_kwh),
                                profile.energy_min_kwh, profile.energy_max_kwh))
            if profile.energy_step_kwh > 0:
                kwh = max(profile.energy_step_kwh,
                          round(kwh / profile.energy_step_kwh) * profile.energy_step_kwh)
            stated = None
            if profile.stated_bias_minutes or profile.stated_noise_minutes:
                noise = abs(rng.normal(0.0, profile.stated_noise_minutes)) \
                    if profile.stated_noise_minutes else 0.0
                stated_minute = min(departure_minute + profile.stated_bias_minutes + noise,
                                    float(MINUTES_PER_DAY))
                stated = midnight + timedelta(minutes=stated_minute)
            serial += 1
            sessions.append(ChargingSession(
                session_id=f"{day.isoformat()}-{serial:03d}",
                arrival=midnight + timedelta(minutes=arrival_minute),
                departure=midnight + timedelta(minutes=departure_minute),
                requested_kwh=kwh,
                user_stated_departure=stated,
            ))
    sessions.sort(key=lambda s: s.arrival)
    return sessions


def generate_days(start: date, n_days: int, seed: int,
                  profile: SyntheticProfile | None = None,
                  clock: SlotClock | None = None,
                  skip_weekends: bool = False) -> dict[date, list[ChargingSession]]:
    """Generate consecutive days of sessions keyed by date."""
    days: dict[date, list[ChargingSession]] = {}
    current = start
    while len(days) < n_days:
        if skip_weekends and current.weekday() >= 5:
            current += timedelta(days=1)
            continue
        days[current] = generate_day(current, seed, profile, clock)
        current += timedelta(days=1)
    return days
