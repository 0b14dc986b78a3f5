"""Non-parametric arrival/demand model with intra-day count adaptation.

Fitting uses the most recent sessions in a rolling window (500 by default).
The expected daily arrival count starts from a 5-day moving average (split
by weekday/weekend) and is corrected each cycle by an integral-action style
update whose gain grows with the time of day and the arrival CDF.  Energy
demand and departure time are modeled per arrival slot with Gaussian KDEs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kde import Kde1D, silverman_bandwidth
from .sessions import MINUTES_PER_DAY, ChargingSession, SessionHistory, SlotClock

#: Bandwidth floors: 5 minutes for time-of-day densities, 0.25 kWh for energy.
TIME_BANDWIDTH_FLOOR = 5.0
ENERGY_BANDWIDTH_FLOOR = 0.25

DAY_TYPES = ("weekday", "weekend")


class ModelFitError(ValueError):
    """Raised when a model cannot be fitted from the available history."""


def day_type_of(weekend: bool) -> str:
    return "weekend" if weekend else "weekday"


def fit_kde(samples: Sequence[float], bandwidth: float) -> Kde1D:
    """Plain Gaussian KDE with an explicit bandwidth (no reflection)."""
    if len(samples) == 0:
        raise ModelFitError("cannot fit a KDE without samples")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return Kde1D.fit(samples, bandwidth)


def initial_daily_count(history: SessionHistory, weekend: bool, ma_days: int = 5) -> float:
    """Moving average of daily arrival counts over the most recent matching days."""
    counts = history.daily_counts(weekend)
    if not counts:
        raise ModelFitError(
            f"history has no {day_type_of(weekend)} days; configure a default count"
        )
    recent = [c for _, c in counts[-ma_days:]]
    return float(np.mean(recent))


def adapt_count(n_hat_k: float, actual_so_far: int, cdf_k: float, k: int, n_p: int) -> float:
    """One intra-day correction of the expected daily arrival count.

    Applies gain sqrt((F_k + k/n_p)/2) to the gap between observed arrivals
    and the count expected by now.  At k = n_p with F = 1 the gain is one and
    the estimate collapses exactly onto the observed total.  The result is
    floored at the observed count, since an expectation below what has
    already arrived is incoherent.
    """
    if not (0.0 <= cdf_k <= 1.0 + 1e-12):
        raise ValueError(f"cdf_k outside [0, 1]: {cdf_k}")
    if not (1 <= k <= n_p):
        raise ValueError(f"slot index k outside 1..{n_p}: {k}")
    gain = adaptation_gain(cdf_k, k, n_p)
    # algebraically (C - n_hat*F)*gain + n_hat, arranged so that gain = F = 1
    # returns the observed count exactly in floating point
    updated = n_hat_k * (1.0 - cdf_k * gain) + actual_so_far * gain
    return max(updated, float(actual_so_far))


def adaptation_gain(cdf_k: float, k: int, n_p: int) -> float:
    """sqrt((F_k + k/n_p)/2); non-decreasing in both arguments, in [0, 1]."""
    return float(np.sqrt((cdf_k + k / n_p) / 2.0))


@dataclass(frozen=True)
class ArrivalModel:
    """Day-type arrival process: time-of-day density plus expected daily count."""

    density: Kde1D                       # over minutes of day, reflected at [0, 1440]
    slot_cdf: np.ndarray                 # F at slot boundaries, length n_p + 1, F[n_p] = 1
    expected_daily_count: float
    day_type: str
    clock: SlotClock = field(default_factory=SlotClock)

    def cdf_at_slot(self, k: int) -> float:
        """F after k slots have elapsed (k in 0..n_p, 1-based slot labels)."""
        return float(self.slot_cdf[k])

    def slot_masses(self) -> np.ndarray:
        """Probability mass of each slot, 0-based indexing, sums to 1."""
        return np.diff(self.slot_cdf)


def fit_arrival_model(history: SessionHistory, weekend: bool,
                      clock: SlotClock | None = None,
                      bandwidth: float | None = None,
                      ma_days: int = 5,
                      default_daily_count: float | None = None) -> ArrivalModel:
    """Fit the arrival KDE and daily-count estimate for one day type."""
    clock = clock or SlotClock()
    window = [s for s in history.window() if s.is_weekend == weekend]
    if not window:
        raise ModelFitError(f"no {day_type_of(weekend)} sessions in the training window")
    minutes = [s.arrival_minute for s in window]
    density = Kde1D.fit(minutes, bandwidth, floor=TIME_BANDWIDTH_FLOOR,
                        lo=0.0, hi=float(MINUTES_PER_DAY))
    boundaries = np.arange(clock.slots_per_day + 1) * clock.cycle_minutes
    cdf = np.asarray(density.cdf(boundaries.astype(float)))
    cdf = cdf - cdf[0]
    if cdf[-1] <= 0:
        raise ModelFitError("degenerate arrival density")
    cdf = cdf / cdf[-1]  # force F at the last boundary to exactly 1
    try:
        n_hat = initial_daily_count(history, weekend, ma_days)
    except ModelFitError:
        if default_daily_count is None:
            raise
        n_hat = float(default_daily_count)
    return ArrivalModel(density, cdf, n_hat, day_type_of(weekend), clock)


def expected_arrivals_in_slot(n_hat_k: float, model: ArrivalModel, s: int) -> float:
    """Expected arrivals in 1-based slot s given the current daily estimate."""
    if not (1 <= s <= model.clock.slots_per_day):
        raise ValueError(f"slot outside 1..{model.clock.slots_per_day}: {s}")
    return n_hat_k * float(model.slot_cdf[s] - model.slot_cdf[s - 1])


@dataclass(frozen=True)
class SlotModel:
    """Departure-time and energy model for arrivals in one grid slot."""

    departure: Kde1D        # minutes of day, reflected at [0, 1440]
    energy: Kde1D           # kWh, reflected at 0
    expected_energy_kwh: float
    expected_departure_minute: float
    n_samples: int
    source_slot: int        # grid slot the samples came from (fallback tracking)

    def expected_departure_slot(self, clock: SlotClock) -> int:
        return clock.grid_slot(min(self.expected_departure_minute, float(MINUTES_PER_DAY)))


@dataclass(frozen=True)
class SlotConditionalModel:
    """Per-slot models with nearest-populated fallback for empty slots."""

    fitted: dict[int, SlotModel]
    clock: SlotClock

    def __post_init__(self):
        if not self.fitted:
            raise ModelFitError("no populated slots to build a slot-conditional model")

    def resolve(self, grid_slot: int) -> SlotModel:
        """Model for a slot; empty slots borrow the nearest populated one.

        Distance ties prefer the earlier slot.
        """
        if grid_slot in self.fitted:
            return self.fitted[grid_slot]
        best = min(self.fitted, key=lambda s: (abs(s - grid_slot), s))
        return self.fitted[best]

    @property
    def populated_slots(self) -> list[int]:
        return sorted(self.fitted)


def fit_slot_models(history: SessionHistory, clock: SlotClock | None = None,
                    time_bandwidth: float | None = None,
                    energy_bandwidth: float | None = None) -> SlotConditionalModel:
    """Fit departure/energy KDEs per arrival slot from the training window."""
    clock = clock or SlotClock()
    window = history.window()
    if not window:
        raise ModelFitError("empty history")
    by_slot: dict[int, list[ChargingSession]] = {}
    for s in window:
        by_slot.setdefault(s.arrival_slot(clock), []).append(s)
    fitted: dict[int, SlotModel] = {}
    for grid_slot, members in sorted(by_slot.items()):
        departures = [m.departure_minute for m in members]
        energies = [m.requested_kwh for m in members]
        fitted[grid_slot] = SlotModel(
            departure=Kde1D.fit(departures, time_bandwidth, floor=TIME_BANDWIDTH_FLOOR,
                                lo=0.0, hi=float(MINUTES_PER_DAY)),
            energy=Kde1D.fit(energies, energy_bandwidth, floor=ENERGY_BANDWIDTH_FLOOR,
                             lo=0.0),
            expected_energy_kwh=float(np.mean(energies)),
            expected_departure_minute=float(np.mean(departures)),
            n_samples=len(members),
            source_slot=grid_slot,
        )
    return SlotConditionalModel(fitted, clock)


@dataclass(frozen=True)
class SlotForecast:
    """Expected load contribution of one future slot."""

    slot: int                      # 1-based label
    expected_arrivals: float
    energy_kwh_per_arrival: float
    departure: Kde1D
    expected_departure_slot: int   # grid (0-based) slot


@dataclass(frozen=True)
class PredictionSet:
    """Forecast for the remaining slots of the day, produced at step k."""

    first_slot: int                # 1-based; covers first_slot..n_p
    n_hat: float
    entries: tuple[SlotForecast, ...]

    @property
    def total_expected_arrivals(self) -> float:
        return sum(e.expected_arrivals for e in self.entries)

    @property
    def total_expected_energy_kwh(self) -> float:
        return sum(e.expected_arrivals * e.energy_kwh_per_arrival for e in self.entries)


def build_prediction_set(k: int, model: ArrivalModel, slot_models: SlotConditionalModel,
                         n_hat: float | None = None) -> PredictionSet:
    """Expected arrivals, energy and departure densities for slots k..n_p.

    ``k`` is 1-based; ``k = n_p + 1`` yields an empty set (nothing left).
    """
    n_p = model.clock.slots_per_day
    if not (1 <= k <= n_p + 1):
        raise ValueError(f"slot index outside 1..{n_p + 1}: {k}")
    n_hat = model.expected_daily_count if n_hat is None else float(n_hat)
    entries = []
    for s in range(k, n_p + 1):
        slot_model = slot_models.resolve(s - 1)
        entries.append(SlotForecast(
            slot=s,
            expected_arrivals=expected_arrivals_in_slot(n_hat, model, s),
            energy_kwh_per_arrival=slot_model.expected_energy_kwh,
            departure=slot_model.departure,
            expected_departure_slot=slot_model.expected_departure_slot(model.clock),
        ))
    return PredictionSet(first_slot=k, n_hat=n_hat, entries=tuple(entries))


# ---------------------------------------------------------------------------
# Serialization for reproducible runs

def _slot_model_to_dict(m: SlotModel) -> dict:
    return {
        "departure": m.departure.to_dict(),
        "energy": m.energy.to_dict(),
        "expected_energy_kwh": m.expected_energy_kwh,
        "expected_departure_minute": m.expected_departure_minute,
        "n_samples": m.n_samples,
        "source_slot": m.source_slot,
    }


def _slot_model_from_dict(d: dict) -> SlotModel:
    return SlotModel(
        departure=Kde1D.from_dict(d["departure"]),
        energy=Kde1D.from_dict(d["energy"]),
        expected_energy_kwh=d["expected_energy_kwh"],
        expected_departure_minute=d["expected_departure_minute"],
        n_samples=d["n_samples"],
        source_slot=d["source_slot"],
    )


def models_to_dict(arrival_models: dict[str, ArrivalModel],
                   slot_models: SlotConditionalModel) -> dict:
    clock = slot_models.clock
    return {
        "cycle_minutes": clock.cycle_minutes,
        "arrival": {
            day_type: {
                "density": m.density.to_dict(),
                "slot_cdf": [float(v) for v in m.slot_cdf],
                "expected_daily_count": m.expected_daily_count,
            }
            for day_type, m in arrival_models.items()
        },
        "slots": {str(s): _slot_model_to_dict(m) for s, m in slot_models.fitted.items()},
    }


def models_from_dict(data: dict) -> tuple[dict[str, ArrivalModel], SlotConditionalModel]:
    clock = SlotClock(data["cycle_minutes"])
    arrival_models = {}
    for day_type, m in data["arrival"].items():
        arrival_models[day_type] = ArrivalModel(
            density=Kde1D.from_dict(m["density"]),
            slot_cdf=np.asarray(m["slot_cdf"], dtype=float),
            expected_daily_count=m["expected_daily_count"],
            day_type=day_type,
            clock=clock,
        )
    slot_models = SlotConditionalModel(
        {int(s): _slot_model_from_dict(m) for s, m in data["slots"].items()}, clock)
    return arrival_models, slot_models


def dump_models_json(arrival_models: dict[str, ArrivalModel],
                     slot_models: SlotConditionalModel) -> str:
    return json.dumps(models_to_dict(arrival_models, slot_models), indent=2, sort_keys=True)
