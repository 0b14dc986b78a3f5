"""Day-level simulation of the charging station under scenarios S1-S4.

Per cycle: release true departures, admit arrivals to free ports, refresh
the predictions (S2), replan the grid cap from the measured state, pick the
ON set by priority, then advance every ON battery through its taper curve.

Scenarios: S1 replans against user-stated departures; S2 replans against
the stochastic model (the predictive algorithm); S3 plans once with perfect
knowledge; S4 charges everything immediately with no cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .battery import BMSParams, EVChargeState, StationState, grid_energy_kwh, step_charge
from .economic import (DpCostModelS2, LoadPolicy, PlannerEV, PricingSchedule,
                       dp_policy_s1, dp_policy_s2)
from .envelope import EnergyEnvelope, sessions_envelope
from .predictor import (ArrivalModel, ModelFitError, PredictionSet, SlotConditionalModel,
                        adapt_count, build_prediction_set, fit_arrival_model,
                        fit_slot_models)
from .scheduler import PriorityLedger, ScheduleDecision, accumulate_priority, fcfs_select, select
from .sessions import ChargingSession, SessionHistory, SlotClock

SCENARIOS = ("S1", "S2", "S3", "S4")


@dataclass
class ScenarioConfig:
    """Everything one simulated day needs besides the sessions themselves."""

    scenario: str = "S2"
    clock: SlotClock = field(default_factory=SlotClock)
    bms: BMSParams = field(default_factory=BMSParams)
    port_count: int = 54
    prices: PricingSchedule | None = None
    w: float = 0.0003
    m1: int = 1
    m2: int = 1
    include_predicted_departures: bool = True
    ma_days: int = 5
    history_window: int = 500
    default_daily_count: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.port_count <= 0:
            raise ValueError("port_count must be positive")
        if self.prices is None:
            raise ValueError("a PricingSchedule is required")

    @property
    def cost_model(self) -> DpCostModelS2:
        return DpCostModelS2(self.w, self.include_predicted_departures)


@dataclass
class SessionOutcome:
    """Per-session fulfillment record."""

    session_id: str
    requested_kwh: float
    delivered_kwh: float = 0.0
    rejected: bool = False
    truncated: bool = False

    @property
    def fully_served(self) -> bool:
        return self.delivered_kwh >= self.requested_kwh * (1.0 - 1e-9)

    @property
    def served_90pct(self) -> bool:
        return self.delivered_kwh >= 0.9 * self.requested_kwh * (1.0 - 1e-9)


@dataclass
class DayTrace:
    """Per-slot series of one simulated day."""

    scenario: str
    caps_kw: np.ndarray            # granted cap per slot (physical max under S4)
    grid_kwh: np.ndarray           # grid-side energy actually bought per slot
    cum_delivered_kwh: np.ndarray  # battery-side cumulative at boundaries 0..n_p
    prices_slot: np.ndarray
    on_off: np.ndarray             # (n_p, ports) bool
    priorities: np.ndarray         # (n_p, ports) ledger value at selection time
    remaining_kwh: np.ndarray      # (n_p, ports) remaining energy at cycle start
    envelope: EnergyEnvelope       # offline band of the admitted sessions
    infeasible_slots: list[int]
    outcomes: list[SessionOutcome]

    @property
    def planned_cost(self) -> float:
        """Cost of the committed caps (grid energy the plans agreed to buy)."""
        cycle_hours = 24.0 / len(self.caps_kw)
        return float(np.sum(self.caps_kw * cycle_hours * self.prices_slot))


@dataclass
class Metrics:
    """Day-level summary in the units the evaluation uses."""

    total_cost: float = 0.0
    delta_e_min: float = 0.0
    requested_kwh: float = 0.0
    delivered_kwh: float = 0.0
    fully_served: int = 0
    served_90pct: int = 0
    total_arrivals: int = 0
    rejected: int = 0
    planned_cost: float = 0.0

    def to_dict(self) -> dict:
        return {
            "total_cost": self.total_cost,
            "delta_e_min": self.delta_e_min,
            "requested_kwh": self.requested_kwh,
            "delivered_kwh": self.delivered_kwh,
            "fully_served": self.fully_served,
            "served_90pct": self.served_90pct,
            "total_arrivals": self.total_arrivals,
            "rejected": self.rejected,
            "planned_cost": self.planned_cost,
        }


def compute_delta_emin(cum_delivered_kwh: np.ndarray, envelope: EnergyEnvelope) -> float:
    """Integrated deficit below the minimum envelope, in kWh x slots."""
    if len(cum_delivered_kwh) != envelope.n_boundaries:
        raise ValueError("trace and envelope use different clocks")
    return float(np.sum(np.maximum(envelope.e_min - cum_delivered_kwh, 0.0)))


@dataclass
class _LiveSession:
    session: ChargingSession
    outcome: SessionOutcome
    state: EVChargeState | None = None  # None once departed / if rejected


def admitted_subset(sessions: list[ChargingSession], port_count: int,
                    clock: SlotClock) -> list[ChargingSession]:
    """Sessions that get a port under lowest-free-port admission.

    Zero-presence sessions (arrival and departure in the same slot) are
    excluded; they can never be scheduled on the cycle grid.
    """
    ports: list[int | None] = [None] * port_count  # holds departure slot
    admitted = []
    events = sorted(sessions, key=lambda s: (s.arrival, s.session_id))
    for s in events:
        ka, kd = s.arrival_slot(clock), s.departure_slot(clock)
        if kd <= ka:
            continue
        for i in range(port_count):
            if ports[i] is not None and ports[i] <= ka:
                ports[i] = None
        slot = next((i for i in range(port_count) if ports[i] is None), None)
        if slot is None:
            continue
        ports[slot] = kd
        admitted.append(s)
    return admitted


def run_day(sessions: list[ChargingSession], config: ScenarioConfig,
            history: SessionHistory | None = None) -> tuple[DayTrace, Metrics]:
    """Simulate one day under one scenario and compute its metrics."""
    clock, params = config.clock, config.bms
    n_p = clock.slots_per_day
    step = params.cycle_step_kwh(clock.cycle_minutes)
    amax = config.port_count
    prices_slot = config.prices.per_slot(clock)
    days = {s.day for s in sessions}
    if len(days) > 1:
        raise ValueError(f"run_day expects sessions of a single day, got {sorted(days)}")

    arrival_model: ArrivalModel | None = None
    slot_models: SlotConditionalModel | None = None
    n_hat = 0.0
    prediction: PredictionSet | None = None
    if config.scenario == "S2":
        if history is None or not history.sessions:
            raise ModelFitError("scenario S2 needs a session history to fit the model")
        training = SessionHistory(history.sessions, config.history_window)
        weekend = sessions[0].is_weekend if sessions else False
        arrival_model = fit_arrival_model(training, weekend, clock,
                                          ma_days=config.ma_days,
                                          default_daily_count=config.default_daily_count)
        slot_models = fit_slot_models(training, clock)
        n_hat = arrival_model.expected_daily_count

    ordered = sorted(sessions, key=lambda s: (s.arrival, s.session_id))
    live = [_LiveSession(s, SessionOutcome(s.session_id, s.requested_kwh,
                                           truncated=s.truncated))
            for s in ordered]
    by_arrival_slot: dict[int, list[_LiveSession]] = {}
    for item in live:
        by_arrival_slot.setdefault(item.session.arrival_slot(clock), []).append(item)

    admitted = admitted_subset(ordered, config.port_count, clock)
    offline_env = sessions_envelope(admitted, params, clock)

    s3_plan: LoadPolicy | None = None
    if config.scenario == "S3":
        evs = [PlannerEV(s.arrival_slot(clock), s.departure_slot(clock), s.requested_kwh)
               for s in admitted]
        s3_plan = dp_policy_s1(evs, config.prices, params, clock, amax,
                               e_a_init=0.0, k0=0)

    station = StationState(config.port_count)
    ledger = PriorityLedger(config.m1, config.m2)
    port_owner: dict[int, _LiveSession] = {}

    caps_kw = np.zeros(n_p)
    grid_kwh = np.zeros(n_p)
    cum = np.zeros(n_p + 1)
    on_off = np.zeros((n_p, config.port_count), dtype=bool)
    priorities = np.zeros((n_p, config.port_count))
    remaining = np.zeros((n_p, config.port_count))
    infeasible_slots: list[int] = []
    arrivals_so_far = 0
    departed_count = 0
    total_cost = 0.0

    for k in range(n_p):
        # departures strictly by the start of this slot
        for port, item in list(port_owner.items()):
            if item.session.departure_slot(clock) <= k:
                item.outcome.delivered_kwh = item.state.delivered_kwh
                item.state = None
                station.ports[port] = None
                del port_owner[port]
                departed_count += 1

        # arrivals of this slot, lowest free port first
        for item in by_arrival_slot.get(k, ()):
            arrivals_so_far += 1
            ka, kd = k, item.session.departure_slot(clock)
            if kd <= ka:
                departed_count += 1  # gone within the slot, never schedulable
                continue
            port = station.free_port()
            if port is None:
                item.outcome.rejected = True
                continue
            state = EVChargeState(requested_kwh=item.session.requested_kwh,
                                  port_index=port, arrival_slot=ka, departure_slot=kd)
            station.ports[port] = state
            item.state = state
            port_owner[port] = item

        if config.scenario == "S2":
            k1 = k + 1  # completed 1-based slots, counting this slot's admissions
            n_hat = adapt_count(n_hat, arrivals_so_far, arrival_model.cdf_at_slot(k1),
                                k1, n_p)
            prediction = build_prediction_set(min(k + 2, n_p + 1), arrival_model,
                                              slot_models, n_hat)

        cap_count: int | None = None
        if config.scenario in ("S1", "S2"):
            evs = []
            for port, item in port_owner.items():
                st = item.state
                if config.scenario == "S1":
                    believed = item.session.stated_departure_slot(clock)
                else:
                    believed = slot_models.resolve(st.arrival_slot) \
                        .expected_departure_slot(clock)
                # a connected EV is observably still here, whatever was believed
                believed = max(believed, k + 1)
                evs.append(PlannerEV(st.arrival_slot, believed, st.requested_kwh,
                                     st.delivered_kwh))
            e_init = sum(ev.delivered_kwh for ev in evs)
            if config.scenario == "S1":
                policy = dp_policy_s1(evs, config.prices, params, clock, amax, e_init, k)
            else:
                policy = dp_policy_s2(evs, prediction, config.prices, config.cost_model,
                                      slot_models, params, clock, amax, e_init, k,
                                      departed_count)
            if policy.infeasible and k in policy.flagged_slots:
                infeasible_slots.append(k)
            cap_count = policy.cap_count(k)
        elif config.scenario == "S3":
            if s3_plan.infeasible and k in s3_plan.flagged_slots:
                infeasible_slots.append(k)
            cap_count = s3_plan.cap_count(k)

        accumulate_priority(ledger, station, k)
        for ev in station.occupied:
            priorities[k, ev.port_index] = ledger.priority_of(ev.port_index)
            remaining[k, ev.port_index] = ev.remaining_kwh

        if cap_count is None:
            decision = fcfs_select(station)
            caps_kw[k] = config.port_count * params.p_ch_max
        else:
            decision = select(ledger, station, cap_count)
            caps_kw[k] = cap_count * params.p_ch_max
        on_off[k] = decision.on_off

        slot_grid = 0.0
        for port in decision.on_ports:
            old = station.ports[port]
            new = step_charge(old, True, clock.cycle_minutes, params)
            slot_grid += grid_energy_kwh(old, new, params)
            station.ports[port] = new
            port_owner[port].state = new
        grid_kwh[k] = slot_grid
        total_cost += slot_grid * prices_slot[k]
        cum[k + 1] = cum[k] + slot_grid * params.eta

    for item in live:  # still connected at day end
        if item.state is not None:
            item.outcome.delivered_kwh = item.state.delivered_kwh
            item.outcome.truncated = True

    outcomes = [item.outcome for item in live]
    trace = DayTrace(config.scenario, caps_kw, grid_kwh, cum, prices_slot, on_off,
                     priorities, remaining, offline_env, infeasible_slots, outcomes)
    metrics = Metrics(
        total_cost=total_cost,
        delta_e_min=compute_delta_emin(cum, offline_env),
        requested_kwh=sum(o.requested_kwh for o in outcomes),
        delivered_kwh=sum(o.delivered_kwh for o in outcomes),
        fully_served=sum(o.fully_served for o in outcomes),
        served_90pct=sum(o.served_90pct for o in outcomes),
        total_arrivals=len(outcomes),
        rejected=sum(o.rejected for o in outcomes),
        planned_cost=float(np.sum(caps_kw * clock.cycle_hours * prices_slot)),
    )
    return trace, metrics


def run_offline_s3(sessions: list[ChargingSession], config: ScenarioConfig
                   ) -> tuple[DayTrace, Metrics]:
    """Benchmark run: a single plan with perfect knowledge of the day."""
    from dataclasses import replace as _replace
    return run_day(sessions, _replace(config, scenario="S3"))


@dataclass
class RangeResult:
    """Cumulative curves over a day range, per scenario."""

    dates: list[date]
    daily: dict[str, list[Metrics]]

    def cumulative_cost(self, scenario: str) -> np.ndarray:
        return np.cumsum([m.total_cost for m in self.daily[scenario]])

    def cumulative_delta_emin(self, scenario: str) -> np.ndarray:
        return np.cumsum([m.delta_e_min for m in self.daily[scenario]])

    def totals(self, scenario: str) -> Metrics:
        out = Metrics()
        for m in self.daily[scenario]:
            out.total_cost += m.total_cost
            out.delta_e_min += m.delta_e_min
            out.requested_kwh += m.requested_kwh
            out.delivered_kwh += m.delivered_kwh
            out.fully_served += m.fully_served
            out.served_90pct += m.served_90pct
            out.total_arrivals += m.total_arrivals
            out.rejected += m.rejected
            out.planned_cost += m.planned_cost
        return out


def run_range(days: dict[date, list[ChargingSession]], configs: list[ScenarioConfig],
              history: SessionHistory | None = None) -> RangeResult:
    """Run each day under every scenario, rolling the history forward daily.

    The stochastic model is refitted from the history at the beginning of
    each day; the day's own sessions join the history only afterwards.
    """
    history = history or SessionHistory()
    dates = sorted(days)
    daily: dict[str, list[Metrics]] = {c.scenario: [] for c in configs}
    for day in dates:
        sessions = days[day]
        for config in configs:
            _, metrics = run_day(sessions, config, history)
            daily[config.scenario].append(metrics)
        history.extend(sessions)
    return RangeResult(dates, daily)
