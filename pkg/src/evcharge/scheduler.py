"""Scheduling layer: share the granted power cap among connected EVs.

Each waiting EV accumulates a priority score of
``(slots_since_arrival ** m1) * (remaining_kwh ** m2)`` per cycle.  Turning
ON the highest-priority EVs maximizes the (linear) selection objective, so
the greedy pick is exactly optimal under the cap.  With m2 = 0 the score
depends on waiting time only and the policy degenerates to FCFS seniority.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .battery import StationState


@dataclass
class LedgerEntry:
    priority: float
    arrival_slot: int
    port_index: int


@dataclass
class PriorityLedger:
    """Accumulated time-energy priority per occupied port."""

    m1: int = 1
    m2: int = 1
    entries: dict[int, LedgerEntry] = field(default_factory=dict)

    def __post_init__(self):
        if self.m1 < 0 or self.m2 < 0:
            raise ValueError("priority exponents must be non-negative")

    def priority_of(self, port_index: int) -> float:
        entry = self.entries.get(port_index)
        return entry.priority if entry else 0.0


def accumulate_priority(ledger: PriorityLedger, station: StationState, k: int) -> None:
    """Add this cycle's waiting/backlog term for every unfinished EV.

    Called once per cycle with the state at cycle start.  Ports whose EV
    departed or finished are dropped, so a new EV on the same port starts
    from zero.
    """
    active_ports = set()
    for ev in station.occupied:
        if ev.complete:
            continue
        active_ports.add(ev.port_index)
        entry = ledger.entries.get(ev.port_index)
        if entry is None or entry.arrival_slot != ev.arrival_slot:
            entry = LedgerEntry(0.0, ev.arrival_slot, ev.port_index)
            ledger.entries[ev.port_index] = entry
        waited = k - ev.arrival_slot
        entry.priority += (waited ** ledger.m1) * (ev.remaining_kwh ** ledger.m2)
    for port in list(ledger.entries):
        if port not in active_ports:
            del ledger.entries[port]


@dataclass(frozen=True)
class ScheduleDecision:
    """ON/OFF vector for all ports plus the implied mode id."""

    on_off: tuple[bool, ...]

    @property
    def on_ports(self) -> list[int]:
        return [i for i, on in enumerate(self.on_off) if on]

    @property
    def on_count(self) -> int:
        return sum(self.on_off)

    @property
    def mode(self) -> int:
        """Binary encoding of the port states (port 0 = least significant bit)."""
        return sum(1 << i for i, on in enumerate(self.on_off) if on)


def select(ledger: PriorityLedger, station: StationState, cap_count: int) -> ScheduleDecision:
    """Turn ON the cap_count eligible EVs with the highest priorities.

    Ties prefer the earlier arrival, then the lower port index.  Because the
    objective is linear in the ON/OFF vector with non-negative coefficients,
    this greedy choice attains the optimum over all feasible on/off modes.
    """
    if cap_count < 0:
        raise ValueError("cap_count must be non-negative")
    eligible = [ev for ev in station.occupied if not ev.complete]
    ranked = sorted(
        eligible,
        key=lambda ev: (-ledger.priority_of(ev.port_index), ev.arrival_slot, ev.port_index),
    )
    chosen = {ev.port_index for ev in ranked[:cap_count]}
    return ScheduleDecision(tuple(i in chosen for i in range(station.port_count)))


def fcfs_select(station: StationState) -> ScheduleDecision:
    """Uncontrolled baseline: every connected, unfinished EV charges."""
    on = {ev.port_index for ev in station.occupied if not ev.complete}
    return ScheduleDecision(tuple(i in on for i in range(station.port_count)))
