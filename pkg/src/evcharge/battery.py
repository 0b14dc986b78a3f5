"""Per-EV charge dynamics: normalized energy integrator driven by a BMS taper.

The charger delivers a piecewise power curve as a function of the fraction
of requested energy already supplied: full power up to ``delta1``, a linear
taper down to ``delta2``, then a constant floor until completion.  The
fraction obeys ``df/dt = eta * P(f) / requested_kwh``, which is integrated
in closed form per region (linear, exponential, linear), so cycle stepping
is exact regardless of step size.

Power is metered grid-side (the curve value); ``eta`` scales what lands in
the battery.  Grid energy for a step is ``delta_fraction * requested / eta``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

_FULL = 1.0 - 1e-12  # fractions >= this count as complete


@dataclass(frozen=True)
class BMSParams:
    """Charger/battery parameters shared by every port of the station."""

    p_ch_max: float = 7.36   # kW, 230 V x 32 A
    delta1: float = 0.8
    delta2: float = 0.95
    eta: float = 0.95

    def __post_init__(self):
        if self.p_ch_max <= 0:
            raise ValueError("p_ch_max must be positive")
        if not (0 < self.delta1 <= self.delta2 <= 1):
            # delta1 == delta2 == 1 is the ideal (taper-free) battery used as
            # a benchmark configuration.
            raise ValueError("thresholds must satisfy 0 < delta1 <= delta2 <= 1")
        if not (0 < self.eta <= 1):
            raise ValueError("eta must be in (0, 1]")

    @property
    def floor_power(self) -> float:
        """Constant power of the final region (equals p_ch_max when delta1 = 1)."""
        if self.delta1 >= 1.0:
            return self.p_ch_max
        return (1.0 - self.delta2) / (1.0 - self.delta1) * self.p_ch_max

    def cycle_step_kwh(self, cycle_minutes: float) -> float:
        """Grid energy bought by one port held ON at full power for one cycle."""
        return self.p_ch_max * cycle_minutes / 60.0


def ideal_battery(p_ch_max: float = 7.36) -> BMSParams:
    """Taper-free, lossless parameters (constant full power until complete)."""
    return BMSParams(p_ch_max=p_ch_max, delta1=1.0, delta2=1.0, eta=1.0)


def bms_power(fraction_delivered: float, params: BMSParams) -> float:
    """Grid-side power drawn at a given delivered fraction (Fig.-1 style curve)."""
    f = fraction_delivered
    if not (0.0 <= f <= 1.0):
        raise ValueError(f"fraction_delivered outside [0, 1]: {f}")
    if f <= params.delta1:
        return params.p_ch_max
    if f <= params.delta2:
        return (1.0 - f) * params.p_ch_max / (1.0 - params.delta1)
    return params.floor_power


def advance_fraction(fraction: float, requested_kwh: float, params: BMSParams,
                     dt_minutes: float) -> float:
    """Integrate the taper dynamics exactly over one step, clipped at 1.

    Walks the remaining time through the three regions using the closed-form
    solution of each (constant power -> linear fraction, linear power ->
    exponential fraction), so region boundaries are hit exactly.
    """
    if dt_minutes <= 0:
        raise ValueError("dt_minutes must be positive")
    if requested_kwh <= 0:
        return 1.0
    if fraction >= _FULL:
        return 1.0

    remaining_h = dt_minutes / 60.0
    f = fraction
    base_rate = params.eta * params.p_ch_max / requested_kwh  # fraction per hour
    while remaining_h > 0 and f < _FULL:
        if f < params.delta1:
            boundary = min(params.delta1, 1.0)
            t_exit = (boundary - f) / base_rate
            if t_exit > remaining_h:
                f += base_rate * remaining_h
                remaining_h = 0.0
            else:
                f = boundary
                remaining_h -= t_exit
        elif f < params.delta2:
            lam = base_rate / (1.0 - params.delta1)
            if params.delta2 >= 1.0:
                # taper asymptotically approaches 1, no region exit
                f = 1.0 - (1.0 - f) * math.exp(-lam * remaining_h)
                remaining_h = 0.0
            else:
                t_exit = math.log((1.0 - f) / (1.0 - params.delta2)) / lam
                if t_exit > remaining_h:
                    f = 1.0 - (1.0 - f) * math.exp(-lam * remaining_h)
                    remaining_h = 0.0
                else:
                    f = params.delta2
                    remaining_h -= t_exit
        else:
            rate = base_rate * (1.0 - params.delta2) / (1.0 - params.delta1)
            t_exit = (1.0 - f) / rate
            if t_exit > remaining_h:
                f += rate * remaining_h
                remaining_h = 0.0
            else:
                f = 1.0
                remaining_h -= t_exit
    return min(f, 1.0)


def time_to_full_minutes(fraction: float, requested_kwh: float, params: BMSParams) -> float:
    """Exact remaining charge duration from a given fraction; inf if unreachable."""
    if requested_kwh <= 0 or fraction >= _FULL:
        return 0.0
    base_rate = params.eta * params.p_ch_max / requested_kwh
    f = fraction
    hours = 0.0
    if f < params.delta1:
        hours += (min(params.delta1, 1.0) - f) / base_rate
        f = min(params.delta1, 1.0)
    if f < params.delta2:
        if params.delta2 >= 1.0:
            return math.inf
        lam = base_rate / (1.0 - params.delta1)
        hours += math.log((1.0 - f) / (1.0 - params.delta2)) / lam
        f = params.delta2
    if f < 1.0:
        rate = base_rate * (1.0 - params.delta2) / (1.0 - params.delta1)
        hours += (1.0 - f) / rate
    return hours * 60.0


@dataclass
class EVChargeState:
    """Charge progress of one connected EV."""

    requested_kwh: float
    port_index: int
    arrival_slot: int
    departure_slot: int
    fraction_delivered: float = 0.0

    def __post_init__(self):
        if self.requested_kwh <= 0:
            self.fraction_delivered = 1.0

    @property
    def delivered_kwh(self) -> float:
        return self.fraction_delivered * self.requested_kwh

    @property
    def remaining_kwh(self) -> float:
        return max(self.requested_kwh - self.delivered_kwh, 0.0)

    @property
    def complete(self) -> bool:
        return self.fraction_delivered >= _FULL


def step_charge(state: EVChargeState, switched_on: bool, dt_minutes: float,
                params: BMSParams) -> EVChargeState:
    """Advance one EV by one cycle; OFF or complete states pass through."""
    if not switched_on or state.complete:
        return state
    new_fraction = advance_fraction(state.fraction_delivered, state.requested_kwh,
                                    params, dt_minutes)
    return replace(state, fraction_delivered=new_fraction)


def grid_energy_kwh(old: EVChargeState, new: EVChargeState, params: BMSParams) -> float:
    """Grid-side energy bought while an EV moved between two charge states."""
    delivered = (new.fraction_delivered - old.fraction_delivered) * old.requested_kwh
    return delivered / params.eta


@dataclass
class StationState:
    """All occupied ports of the station plus the aggregate energy meter."""

    port_count: int
    ports: list[EVChargeState | None] = field(default_factory=list)

    def __post_init__(self):
        if not self.ports:
            self.ports = [None] * self.port_count
        if len(self.ports) != self.port_count:
            raise ValueError("ports length must equal port_count")

    @property
    def occupied(self) -> list[EVChargeState]:
        return [p for p in self.ports if p is not None]

    @property
    def aggregate_delivered_kwh(self) -> float:
        return sum(p.delivered_kwh for p in self.occupied)

    def free_port(self) -> int | None:
        for i, p in enumerate(self.ports):
            if p is None:
                return i
        return None


def simulate_full_charge(requested_kwh: float, params: BMSParams,
                         dt_minutes: float = 10.0) -> list[tuple[float, float, float]]:
    """Charge one EV to completion; returns (minute, power_kw, cumulative_kwh) rows.

    Rows are sampled every ``dt_minutes`` plus a final row at the exact
    completion time (power 0 there, since supply stops when the request is
    met).  Warns when the step cannot resolve the linear-taper region.
    """
    if requested_kwh <= 0:
        raise ValueError("requested_kwh must be positive")
    if params.delta2 > params.delta1 and params.delta2 < 1.0:
        lam = params.eta * params.p_ch_max / ((1.0 - params.delta1) * requested_kwh)
        taper_minutes = math.log((1.0 - params.delta1) / (1.0 - params.delta2)) / lam * 60.0
        if dt_minutes > taper_minutes:
            warnings.warn(
                f"dt of {dt_minutes:g} min cannot resolve the {taper_minutes:.2f} min "
                "taper region", stacklevel=2)

    total_minutes = time_to_full_minutes(0.0, requested_kwh, params)
    if not math.isfinite(total_minutes):
        raise ValueError("charge never completes with delta2 = 1 and delta1 < 1")
    rows: list[tuple[float, float, float]] = []
    t = 0.0
    fraction = 0.0
    while t < total_minutes:
        rows.append((t, bms_power(fraction, params), fraction * requested_kwh))
        fraction = advance_fraction(fraction, requested_kwh, params, dt_minutes)
        t += dt_minutes
    rows.append((total_minutes, 0.0, requested_kwh))
    return rows
