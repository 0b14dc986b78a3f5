"""Cumulative-energy envelopes bounding what the station can and must deliver.

For an EV present from its arrival slot ``a`` until (the start of) its
departure slot ``d``, the deliverable ceiling after ``k`` boundaries is
``min(step * (k - a), requested)`` and the deadline floor is
``max(requested - step * (d - k), 0)`` where ``step`` is the energy one port
moves per cycle at full power.  Aggregating over EVs gives the state-space
band the economic layer plans inside.

Envelopes are arrays over slot boundaries 0..n_p; before arrival an EV
contributes zero, after departure it contributes its full request to both
sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .battery import BMSParams
from .sessions import ChargingSession, SlotClock

#: tolerance applied to energy/step ratios before rounding to grid indices
GRID_TOL = 1e-7


@dataclass(frozen=True)
class EnergyEnvelope:
    """Aggregated cumulative bounds per slot boundary (arrays of length n_p + 1)."""

    e_max: np.ndarray
    e_min: np.ndarray

    def __post_init__(self):
        if self.e_max.shape != self.e_min.shape:
            raise ValueError("e_max and e_min must have the same shape")

    @property
    def n_boundaries(self) -> int:
        return len(self.e_max)

    def is_consistent(self) -> bool:
        """True when the band is non-empty and both sides are non-decreasing."""
        return bool(
            np.all(self.e_min <= self.e_max + 1e-9)
            and np.all(np.diff(self.e_max) >= -1e-9)
            and np.all(np.diff(self.e_min) >= -1e-9)
        )


def envelope_profile(arrival_slot: int, departure_slot: int, requested_kwh: float,
                     step_kwh: float, n_p: int, weight: float = 1.0
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Per-EV (e_max, e_min) over boundaries 0..n_p.

    ``weight`` scales both the request and the per-cycle rate; fractional
    weights model expected (not yet arrived) EVs.
    """
    if departure_slot < arrival_slot:
        raise ValueError("departure slot before arrival slot")
    ka = max(arrival_slot, 0)
    kd = min(departure_slot, n_p)
    k = np.arange(n_p + 1)
    ahead = np.clip(k - ka, 0, None) * step_kwh
    behind = np.clip(kd - k, 0, None) * step_kwh
    e_max = np.where(k < ka, 0.0, np.minimum(ahead, requested_kwh))
    e_min = np.where(k < ka, 0.0, np.maximum(requested_kwh - behind, 0.0))
    e_max = np.where(k > kd, requested_kwh, e_max)
    e_min = np.where(k > kd, requested_kwh, e_min)
    return weight * e_max, weight * e_min


def per_ev_envelope(session: ChargingSession, params: BMSParams, clock: SlotClock
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Envelope of one session using its own arrival/departure slots."""
    return envelope_profile(
        session.arrival_slot(clock),
        session.departure_slot(clock),
        session.requested_kwh,
        params.cycle_step_kwh(clock.cycle_minutes),
        clock.slots_per_day,
    )


def aggregate_envelope(per_ev: Iterable[tuple[np.ndarray, np.ndarray]],
                       n_p: int | None = None) -> EnergyEnvelope:
    """Elementwise sum of per-EV envelopes (empty input gives a zero band)."""
    profiles = list(per_ev)
    if not profiles:
        if n_p is None:
            raise ValueError("n_p required for an empty aggregate")
        zero = np.zeros(n_p + 1)
        return EnergyEnvelope(zero, zero.copy())
    e_max = np.sum([p[0] for p in profiles], axis=0)
    e_min = np.sum([p[1] for p in profiles], axis=0)
    return EnergyEnvelope(np.asarray(e_max, dtype=float), np.asarray(e_min, dtype=float))


def sessions_envelope(sessions: Sequence[ChargingSession], params: BMSParams,
                      clock: SlotClock) -> EnergyEnvelope:
    """Aggregate envelope of a list of sessions (the offline/true band)."""
    return aggregate_envelope(
        (per_ev_envelope(s, params, clock) for s in sessions),
        n_p=clock.slots_per_day,
    )


def decision_space(e_a_k: float, e_min_next: float, e_max_next: float,
                   p_g_max: float, params: BMSParams, clock: SlotClock
                   ) -> tuple[int, int]:
    """Feasible ON-port counts for one cycle given the next-boundary bounds.

    Returns (lower, upper); upper < lower signals an infeasible state.
    """
    step = params.cycle_step_kwh(clock.cycle_minutes)
    cap_energy = p_g_max * clock.cycle_hours
    lower = math.ceil(max(e_min_next - e_a_k, 0.0) / step - GRID_TOL)
    upper = math.floor(min(e_max_next - e_a_k, cap_energy) / step + GRID_TOL)
    return max(lower, 0), upper
