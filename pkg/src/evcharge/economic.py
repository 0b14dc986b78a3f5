"""Economic layer: optimal per-cycle grid-power caps under TOU prices.

The planner walks a dynamic program backward over slot boundaries.  States
are cumulative delivered energy on an exact lattice anchored at the current
meter reading with spacing ``step = p_ch_max * cycle/60`` (ON/OFF port
decisions move the planned state by whole steps).  Actions are ON-port
counts, priced at ``count * step * price``.

Two cost models:

* S1 (and the offline S3 benchmark): action cost only, states confined to
  the [e_min, e_max] band, deadlines enforced by e_min.
* S2 (predictive): no e_min; each visited state additionally pays
  ``distance_below_e_max_in_steps * expected_departed(k) * weight``, which
  pushes charging ahead of predicted departures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .battery import BMSParams
from .envelope import GRID_TOL, EnergyEnvelope, aggregate_envelope, envelope_profile
from .kde import Kde1D
from .predictor import PredictionSet, SlotConditionalModel
from .sessions import SlotClock


@dataclass(frozen=True)
class PricingSchedule:
    """Day-ahead hourly electricity prices (currency per kWh)."""

    hourly: tuple[float, ...]

    def __post_init__(self):
        if len(self.hourly) != 24:
            raise ValueError(f"expected 24 hourly prices, got {len(self.hourly)}")
        if any(p < 0 for p in self.hourly):
            raise ValueError("prices must be non-negative")

    def per_slot(self, clock: SlotClock) -> np.ndarray:
        """Piecewise-constant expansion: each hour's price covers its slots."""
        hours = np.arange(clock.slots_per_day) * clock.cycle_minutes // 60
        return np.asarray(self.hourly, dtype=float)[hours]

    @classmethod
    def parse(cls, text: str) -> "PricingSchedule":
        """Parse 24 comma-separated currency/kWh values (hour 0-23)."""
        values = [float(v) for v in text.replace(",", " ").split()]
        return cls(tuple(values))

    @classmethod
    def from_file(cls, path) -> "PricingSchedule":
        with open(path) as fh:
            return cls.parse(fh.read())


@dataclass(frozen=True)
class DpCostModelS2:
    """Weights of the predictive state cost."""

    weight: float = 0.0003
    include_predicted_departures: bool = True

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("weight must be non-negative")


@dataclass
class LoadPolicy:
    """Per-cycle grid caps (as ON-port counts) plus the planned trajectory."""

    start_slot: int
    counts: np.ndarray            # ON ports per slot, start_slot..n_p-1
    planned_kwh: np.ndarray       # cumulative energy at boundaries start_slot..n_p
    cost: float
    p_ch_max: float
    infeasible: bool = False
    flagged_slots: list[int] = field(default_factory=list)

    def cap_count(self, k: int) -> int:
        """ON-port budget for absolute slot k (0 outside the planned range)."""
        i = k - self.start_slot
        if 0 <= i < len(self.counts):
            return int(self.counts[i])
        return 0

    def cap_kw(self, k: int) -> float:
        return self.cap_count(k) * self.p_ch_max

    @property
    def caps_kw(self) -> np.ndarray:
        return self.counts * self.p_ch_max


def solve_policy(e_init: float, k0: int, env: EnergyEnvelope,
                 prices_slot: np.ndarray, params: BMSParams, clock: SlotClock,
                 amax: int, b: np.ndarray | None = None, weight: float = 0.0,
                 soft_ceiling: bool = False) -> LoadPolicy:
    """Backward-induction solve from slot k0 to the end of the day.

    ``b`` (expected departed count per boundary) together with ``weight``
    enables the S2 state cost; leaving them unset gives the S1/S3 model.
    Cost ties prefer the smaller ON count, deferring energy purchases.
    Infeasible instances fall back to max-feasible charging with the empty
    cycles flagged.

    Fractional requests pinch the band between lattice points (the floor
    demands the point above, the ceiling admits only the point below); the
    ceiling then yields one completion quantum so the last partial step of a
    request can still be bought.  ``soft_ceiling`` (the no-floor predictive
    model) instead rounds the ceiling up to the lattice throughout, since
    there it is a target to approach, not a hard wall.  Both rules vanish on
    grid-exact instances.
    """
    n_p = clock.slots_per_day
    step = params.cycle_step_kwh(clock.cycle_minutes)
    if len(prices_slot) != n_p or env.n_boundaries != n_p + 1:
        raise ValueError("price/envelope length mismatch with the clock")
    if k0 >= n_p:
        return LoadPolicy(k0, np.zeros(0, dtype=int), np.array([e_init]), 0.0,
                          params.p_ch_max)

    if soft_ceiling:
        jhi = np.ceil((env.e_max - e_init) / step - GRID_TOL).astype(np.int64)
    else:
        jhi = np.floor((env.e_max - e_init) / step + GRID_TOL).astype(np.int64)
    jlo = np.maximum(np.ceil((env.e_min - e_init) / step - GRID_TOL).astype(np.int64), 0)
    jlo[k0] = 0  # the measured state is a given, the floor binds from k0+1 on
    band_ok = env.e_min <= env.e_max + 1e-9 * np.maximum(step, np.abs(env.e_max))
    pinched = band_ok & (jlo > jhi)
    jhi = np.where(pinched, jlo, jhi)
    n_states = int(max(jhi[k0:].max(), 0)) + 1
    states = e_init + np.arange(n_states) * step

    action_cost_base = np.arange(amax + 1) * step  # scaled by price per stage
    inf_pad = np.full(amax, np.inf)
    value = np.full(n_states, np.inf)
    lo_t, hi_t = int(jlo[n_p]), int(min(jhi[n_p], n_states - 1))
    if lo_t <= hi_t:
        value[lo_t:hi_t + 1] = 0.0
    actions = np.zeros((n_p - k0, n_states), dtype=np.int16)

    for k in range(n_p - 1, k0 - 1, -1):
        windows = sliding_window_view(np.concatenate([value, inf_pad]), amax + 1)
        cand = windows + action_cost_base * prices_slot[k]
        best = cand.min(axis=1)
        act = cand.argmin(axis=1)  # first minimum = smallest count on ties
        if b is not None and weight > 0.0:
            dist = np.maximum(env.e_max[k] - states, 0.0) / step
            best = best + dist * (b[k] * weight)
        lo_k, hi_k = int(jlo[k]), int(min(jhi[k], n_states - 1))
        if lo_k > 0:
            best[:lo_k] = np.inf
        if hi_k < n_states - 1:
            best[hi_k + 1:] = np.inf
        actions[k - k0] = act
        value = best

    if not np.isfinite(value[0]):
        return _max_feasible_fallback(e_init, k0, env, prices_slot, params, clock, amax)

    counts = np.zeros(n_p - k0, dtype=int)
    trajectory = np.zeros(n_p - k0 + 1, dtype=np.int64)
    j = 0
    for k in range(k0, n_p):
        a = int(actions[k - k0][j])
        counts[k - k0] = a
        j += a
        trajectory[k - k0 + 1] = j
    return LoadPolicy(k0, counts, e_init + trajectory * step, float(value[0]),
                      params.p_ch_max)


def _max_feasible_fallback(e_init: float, k0: int, env: EnergyEnvelope,
                           prices_slot: np.ndarray, params: BMSParams,
                           clock: SlotClock, amax: int) -> LoadPolicy:
    """No in-band trajectory exists: charge as fast as the ceiling allows.

    Executed one cycle at a time under replanning, this is the catch-up
    behavior; cycles whose decision space is empty are flagged.
    """
    n_p = clock.slots_per_day
    step = params.cycle_step_kwh(clock.cycle_minutes)
    counts = np.zeros(n_p - k0, dtype=int)
    planned = np.zeros(n_p - k0 + 1)
    planned[0] = e_init
    flagged: list[int] = []
    e = e_init
    cost = 0.0
    for k in range(k0, n_p):
        lower = math.ceil(max(env.e_min[k + 1] - e, 0.0) / step - GRID_TOL)
        upper = min(math.floor((env.e_max[k + 1] - e) / step + GRID_TOL), amax)
        if lower > upper:
            flagged.append(k)
            a = min(max(lower, 0), amax)  # chase the floor; batteries absorb less
        else:
            a = max(upper, 0)
        counts[k - k0] = a
        e += a * step
        cost += a * step * prices_slot[k]
        planned[k - k0 + 1] = e
    return LoadPolicy(k0, counts, planned, cost, params.p_ch_max,
                      infeasible=True, flagged_slots=flagged)


@dataclass(frozen=True)
class PlannerEV:
    """Planner view of one EV: believed departure, not necessarily the true one."""

    arrival_slot: int
    believed_departure_slot: int
    requested_kwh: float
    delivered_kwh: float = 0.0
    weight: float = 1.0


def planner_envelope(evs: Sequence[PlannerEV], params: BMSParams, clock: SlotClock
                     ) -> EnergyEnvelope:
    step = params.cycle_step_kwh(clock.cycle_minutes)
    return aggregate_envelope(
        (envelope_profile(ev.arrival_slot, ev.believed_departure_slot, ev.requested_kwh,
                          step, clock.slots_per_day, ev.weight) for ev in evs),
        n_p=clock.slots_per_day,
    )


def dp_policy_s1(evs: Sequence[PlannerEV], prices: PricingSchedule, params: BMSParams,
                 clock: SlotClock, amax: int, e_a_init: float, k0: int) -> LoadPolicy:
    """Real-time DP: envelope from the connected EVs with stated departures."""
    env = planner_envelope(evs, params, clock)
    return solve_policy(e_a_init, k0, env, prices.per_slot(clock), params, clock, amax)


def departed_profile(connected_arrival_slots: Sequence[int],
                     prediction: PredictionSet | None,
                     slot_models: SlotConditionalModel, clock: SlotClock,
                     departed_count: int = 0, include_predicted: bool = True
                     ) -> np.ndarray:
    """Expected number of EVs departed by each boundary 0..n_p.

    Connected EVs contribute the departure CDF of their arrival-slot model,
    already-departed EVs contribute one, and (optionally) each forecast slot
    contributes its expected arrivals scaled by that slot's departure CDF.
    An EV arriving in grid slot g can only have departed from boundary g+1 on.
    """
    n_p = clock.slots_per_day
    boundary_minutes = np.arange(n_p + 1, dtype=float) * clock.cycle_minutes
    b = np.full(n_p + 1, float(departed_count))
    for g in connected_arrival_slots:
        cdf = np.asarray(slot_models.resolve(g).departure.cdf(boundary_minutes))
        cdf[:min(g + 1, n_p + 1)] = 0.0
        b += cdf
    if prediction is not None and include_predicted:
        for entry in prediction.entries:
            if entry.expected_arrivals <= 0.0:
                continue
            g = entry.slot - 1  # 1-based label -> grid slot
            cdf = np.asarray(entry.departure.cdf(boundary_minutes))
            cdf[:min(g + 1, n_p + 1)] = 0.0
            b += entry.expected_arrivals * cdf
    return b


def expected_departed_count(k: int, connected_arrival_slots: Sequence[int],
                            prediction: PredictionSet | None,
                            slot_models: SlotConditionalModel, clock: SlotClock,
                            departed_count: int = 0,
                            include_predicted: bool = True) -> float:
    """Expected departed EVs at boundary k (scalar view of departed_profile)."""
    profile = departed_profile(connected_arrival_slots, prediction, slot_models,
                               clock, departed_count, include_predicted)
    return float(profile[k])


def prediction_envelope(prediction: PredictionSet | None, params: BMSParams,
                        clock: SlotClock) -> list[tuple[np.ndarray, np.ndarray]]:
    """Ceiling contributions of forecast arrivals (expected-value virtual EVs)."""
    profiles = []
    if prediction is None:
        return profiles
    step = params.cycle_step_kwh(clock.cycle_minutes)
    n_p = clock.slots_per_day
    for entry in prediction.entries:
        if entry.expected_arrivals <= 0.0 or entry.energy_kwh_per_arrival <= 0.0:
            continue
        g = entry.slot - 1
        depart = max(entry.expected_departure_slot, g + 1)
        profiles.append(envelope_profile(g, depart, entry.energy_kwh_per_arrival,
                                         step, n_p, weight=entry.expected_arrivals))
    return profiles


def dp_policy_s2(actual_evs: Sequence[PlannerEV], prediction: PredictionSet | None,
                 prices: PricingSchedule, cost_model: DpCostModelS2,
                 slot_models: SlotConditionalModel, params: BMSParams,
                 clock: SlotClock, amax: int, e_a_init: float, k0: int,
                 departed_count: int = 0) -> LoadPolicy:
    """Predictive DP: ceiling from actual plus forecast EVs, no floor.

    The deadline pressure comes from the state cost weighted by the expected
    number of departed vehicles.
    """
    profiles = [envelope_profile(ev.arrival_slot, ev.believed_departure_slot,
                                 ev.requested_kwh,
                                 params.cycle_step_kwh(clock.cycle_minutes),
                                 clock.slots_per_day, ev.weight)
                for ev in actual_evs]
    profiles.extend(prediction_envelope(prediction, params, clock))
    env = aggregate_envelope(profiles, n_p=clock.slots_per_day)
    env = EnergyEnvelope(e_max=env.e_max, e_min=np.zeros_like(env.e_max))
    b = departed_profile([ev.arrival_slot for ev in actual_evs], prediction,
                         slot_models, clock, departed_count,
                         cost_model.include_predicted_departures)
    return solve_policy(e_a_init, k0, env, prices.per_slot(clock), params, clock,
                        amax, b=b, weight=cost_model.weight, soft_ceiling=True)


def replan(k: int, scenario: str, evs: Sequence[PlannerEV], prices: PricingSchedule,
           params: BMSParams, clock: SlotClock, amax: int, e_a_init: float,
           prediction: PredictionSet | None = None,
           cost_model: DpCostModelS2 | None = None,
           slot_models: SlotConditionalModel | None = None,
           departed_count: int = 0) -> LoadPolicy:
    """Recompute the remaining-day policy from the measured energy state."""
    if scenario in ("S1", "S3"):
        return dp_policy_s1(evs, prices, params, clock, amax, e_a_init, k)
    if scenario == "S2":
        if slot_models is None:
            raise ValueError("S2 replanning requires fitted slot models")
        return dp_policy_s2(evs, prediction, prices, cost_model or DpCostModelS2(),
                            slot_models, params, clock, amax, e_a_init, k,
                            departed_count)
    raise ValueError(f"unknown scenario {scenario!r}")
