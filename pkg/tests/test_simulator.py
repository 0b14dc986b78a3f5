"""Day-level simulation: event ordering, accounting, scenario behavior."""

from datetime import date

import numpy as np
import pytest

from evcharge.battery import BMSParams, ideal_battery
from evcharge.economic import PricingSchedule
from evcharge.envelope import EnergyEnvelope, sessions_envelope
from evcharge.predictor import ModelFitError
from evcharge.sessions import SessionHistory, SlotClock
from evcharge.simulator import (Metrics, ScenarioConfig, admitted_subset,
                                compute_delta_emin, run_day, run_offline_s3, run_range)
from evcharge.synthetic import SyntheticProfile, generate_days

from conftest import make_session


def config_for(scenario, prices, ports=4, bms=None, **kw):
    return ScenarioConfig(scenario=scenario, bms=bms or ideal_battery(),
                          port_count=ports, prices=prices, **kw)


class TestComputeDeltaEmin:
    def test_zero_when_above(self):
        env = EnergyEnvelope(np.full(5, 10.0), np.array([0.0, 1, 2, 3, 4.0]))
        cum = np.array([0.0, 2, 3, 4, 5])
        assert compute_delta_emin(cum, env) == 0.0

    def test_constant_deficit_times_slots(self):
        d, m = 1.5, 4
        e_min = np.array([0.0, 2, 2, 2, 2, 0.0])
        e_min[1:1 + m] = 2.0
        cum = e_min.copy()
        cum[1:1 + m] -= d
        env = EnergyEnvelope(np.full(6, 99.0), e_min)
        assert compute_delta_emin(cum, env) == pytest.approx(d * m)

    def test_linear_in_deficit(self):
        e_min = np.linspace(0, 10, 7)
        cum = e_min - np.array([0, 1, 0, 2, 0, 1, 0.5])
        env = EnergyEnvelope(np.full(7, 99.0), e_min)
        base = compute_delta_emin(cum, env)
        doubled = compute_delta_emin(e_min - 2 * (e_min - cum), env)
        assert doubled == pytest.approx(2 * base)

    def test_length_mismatch(self):
        env = EnergyEnvelope(np.zeros(4), np.zeros(4))
        with pytest.raises(ValueError):
            compute_delta_emin(np.zeros(5), env)


class TestRunDayBasics:
    def test_empty_day(self, flat_prices):
        trace, metrics = run_day([], config_for("S1", flat_prices))
        assert metrics.total_cost == 0.0
        assert metrics.delta_e_min == 0.0
        assert metrics.total_arrivals == 0
        assert np.all(trace.grid_kwh == 0.0)

    @pytest.mark.parametrize("scenario", ["S1", "S3", "S4"])
    def test_single_ev_fully_served(self, scenario, flat_prices):
        s = make_session("one", "08:00", "16:00", 6.0)
        trace, metrics = run_day([s], config_for(scenario, flat_prices))
        assert metrics.fully_served == 1
        assert metrics.delivered_kwh == pytest.approx(6.0, rel=1e-9)

    def test_single_ev_fully_served_s2(self, flat_prices, small_history):
        day = date(2021, 1, 18)  # Monday after the history days
        s = make_session("one", "08:00", "16:00", 6.0, day=day)
        # the departure-urgency weight must outweigh the price of a step at
        # single-EV scale, where the expected-departed count stays near one
        trace, metrics = run_day([s], config_for("S2", flat_prices, w=0.05),
                                 history=small_history)
        assert metrics.fully_served == 1

    def test_s2_without_history_errors(self, flat_prices):
        s = make_session("one", "08:00", "16:00", 6.0)
        with pytest.raises(ModelFitError):
            run_day([s], config_for("S2", flat_prices))
        with pytest.raises(ModelFitError):
            run_day([s], config_for("S2", flat_prices), history=SessionHistory())

    def test_mixed_days_rejected(self, flat_prices):
        a = make_session("a", day=date(2021, 1, 4))
        b = make_session("b", day=date(2021, 1, 5))
        with pytest.raises(ValueError):
            run_day([a, b], config_for("S1", flat_prices))

    def test_s4_draws_bms_power_every_cycle(self, flat_prices, paper_bms):
        sessions = [make_session("a", "08:00", "16:00", 7.0),
                    make_session("b", "08:30", "16:00", 7.0)]
        trace, metrics = run_day(sessions, config_for("S4", flat_prices,
                                                      bms=paper_bms))
        # both arrived, both still below the taper knee: full power each
        k = 51  # 08:30
        assert trace.grid_kwh[k] == pytest.approx(2 * paper_bms.p_ch_max / 6.0)
        assert metrics.fully_served == 2

    def test_port_overflow_rejected_and_logged(self, flat_prices):
        sessions = [make_session(f"s{i}", "08:00", "12:00", 2.0) for i in range(3)]
        trace, metrics = run_day(sessions, config_for("S4", flat_prices, ports=2))
        assert metrics.total_arrivals == 3
        assert metrics.rejected == 1
        rejected = [o for o in trace.outcomes if o.rejected]
        assert len(rejected) == 1 and rejected[0].delivered_kwh == 0.0

    def test_freed_port_reused_same_slot(self, flat_prices):
        sessions = [make_session("a", "08:00", "10:00", 1.0),
                    make_session("b", "10:05", "12:00", 1.0)]
        _, metrics = run_day(sessions, config_for("S4", flat_prices, ports=1))
        assert metrics.rejected == 0
        assert metrics.fully_served == 2


class TestAccounting:
    def test_energy_books_close(self, tou_prices, paper_bms):
        sessions = [make_session(f"s{i}", f"{7 + i}:1{i}", f"{14 + i}:00", 4.5 + i)
                    for i in range(4)]
        trace, metrics = run_day(sessions, config_for("S1", tou_prices,
                                                      bms=paper_bms))
        assert trace.grid_kwh.sum() * paper_bms.eta == \
            pytest.approx(metrics.delivered_kwh, rel=1e-9)
        assert trace.cum_delivered_kwh[-1] == pytest.approx(metrics.delivered_kwh,
                                                            rel=1e-9)
        assert metrics.total_cost == pytest.approx(
            float(np.dot(trace.grid_kwh, trace.prices_slot)), rel=1e-12)

    @pytest.mark.parametrize("scenario", ["S1", "S2", "S3"])
    def test_cap_honored_every_cycle(self, scenario, tou_prices, paper_bms,
                                     small_history):
        day = date(2021, 1, 18)
        sessions = [make_session(f"s{i}", f"{7 + i % 3}:0{i % 6}", "15:30", 6.0,
                                 day=day) for i in range(5)]
        trace, _ = run_day(sessions, config_for(scenario, tou_prices, ports=3,
                                                bms=paper_bms),
                           history=small_history)
        draw_kw = trace.grid_kwh / (10.0 / 60.0)
        assert np.all(draw_kw <= trace.caps_kw + 1e-9)

    def test_no_energy_after_departure(self, flat_prices):
        s = make_session("early", "08:00", "10:00", 50.0)  # can't finish in 2 h
        trace, metrics = run_day([s], config_for("S4", flat_prices))
        k_d = 60  # 10:00
        assert np.all(trace.grid_kwh[k_d:] == 0.0)
        assert 0 < metrics.delivered_kwh < 50.0
        assert metrics.fully_served == 0

    def test_delivered_never_exceeds_requested(self, flat_prices):
        sessions = [make_session(f"s{i}", "07:30", "18:00", 1.0 + 0.37 * i)
                    for i in range(4)]
        _, metrics = run_day(sessions, config_for("S4", flat_prices))
        assert metrics.delivered_kwh <= metrics.requested_kwh + 1e-9
        assert metrics.fully_served == 4

    def test_determinism(self, tou_prices, paper_bms, small_history):
        day = date(2021, 1, 18)
        sessions = generate_days(day, 1, seed=5)[day]
        cfg = config_for("S2", tou_prices, ports=54, bms=paper_bms)
        t1, m1 = run_day(sessions, cfg, small_history)
        t2, m2 = run_day(sessions, cfg, small_history)
        np.testing.assert_array_equal(t1.grid_kwh, t2.grid_kwh)
        np.testing.assert_array_equal(t1.on_off, t2.on_off)
        assert m1.to_dict() == m2.to_dict()


class TestScenarioBehavior:
    def test_s3_ideal_feasible_stays_in_band(self, flat_prices):
        # disjoint stays: aggregate optimum is executable EV by EV
        sessions = [make_session("a", "08:00", "14:00", 3.0),
                    make_session("b", "14:30", "17:00", 2.0)]
        bms = ideal_battery(6.0)  # step = 1 kWh
        trace, metrics = run_offline_s3(sessions, config_for("S3", flat_prices,
                                                             bms=bms))
        env = trace.envelope
        assert np.all(trace.cum_delivered_kwh >= env.e_min - 1e-9)
        assert np.all(trace.cum_delivered_kwh <= env.e_max + 1e-9)
        assert metrics.delta_e_min == 0.0
        assert metrics.fully_served == 2

    def test_s3_equals_s1_cost_flat_prices(self, flat_prices):
        bms = ideal_battery(6.0)
        sessions = [make_session("a", "08:00", "12:00", 3.0),
                    make_session("b", "12:30", "17:00", 4.0)]
        _, m1 = run_day(sessions, config_for("S1", flat_prices, bms=bms))
        _, m3 = run_day(sessions, config_for("S3", flat_prices, bms=bms))
        assert m1.total_cost == pytest.approx(m3.total_cost, rel=1e-12)
        assert m1.delivered_kwh == pytest.approx(7.0, rel=1e-9)
        assert m3.delivered_kwh == pytest.approx(7.0, rel=1e-9)

    def test_overlapping_stays_may_strand_a_tail(self, flat_prices):
        # the aggregate floor treats energy as fungible across EVs: with a
        # shared cheap slot the plan can bank a step in the wrong lane and
        # the early deadline goes unmet; the deficit metric must see it
        bms = ideal_battery(6.0)
        sessions = [make_session("a", "08:00", "15:00", 3.0),
                    make_session("b", "10:00", "17:00", 4.0)]
        _, m3 = run_day(sessions, config_for("S3", flat_prices, bms=bms))
        assert m3.delivered_kwh >= 6.0
        if m3.delivered_kwh < 7.0 - 1e-9:
            assert m3.delta_e_min > 0.0

    def test_s1_trusts_late_stated_departure(self, paper_bms):
        # cheap late window inside the stated stay but after the real one:
        # S1 defers, the EV leaves early, demand goes unmet
        hourly = [0.30] * 15 + [0.05] * 9
        prices = PricingSchedule(tuple(hourly))
        s = make_session("lied", "08:00", "14:00", 7.0, stated="18:00")
        _, m1 = run_day([s], config_for("S1", prices, bms=paper_bms))
        _, m3 = run_day([s], config_for("S3", prices, bms=paper_bms))
        assert m1.delivered_kwh < m3.delivered_kwh - 1.0
        assert m1.delta_e_min > m3.delta_e_min

    def test_s4_cost_at_least_s3(self, tou_prices):
        bms = ideal_battery(6.0)
        sessions = [make_session("a", "07:00", "17:00", 4.0),
                    make_session("b", "08:00", "16:00", 3.0),
                    make_session("c", "09:10", "15:00", 2.0)]
        _, m3 = run_day(sessions, config_for("S3", tou_prices, bms=bms))
        _, m4 = run_day(sessions, config_for("S4", tou_prices, bms=bms))
        assert m3.total_cost <= m4.total_cost + 1e-12


class TestAdmission:
    def test_admitted_subset_respects_ports(self, clock):
        sessions = [make_session(f"s{i}", "08:00", "12:00", 2.0) for i in range(3)]
        admitted = admitted_subset(sessions, 2, clock)
        assert [s.session_id for s in admitted] == ["s0", "s1"]

    def test_zero_presence_excluded(self, clock):
        s = make_session("blip", "08:00", "08:05", 2.0)
        assert admitted_subset([s], 4, clock) == []

    def test_sequential_reuse(self, clock):
        sessions = [make_session("a", "08:00", "10:00", 2.0),
                    make_session("b", "10:00", "12:00", 2.0)]
        assert len(admitted_subset(sessions, 1, clock)) == 2


class TestRunRange:
    def _three_days(self):
        profile = SyntheticProfile(hourly_rates=(0.0,) * 7 + (4.0, 4.0) + (0.0,) * 15,
                                   energy_mean_kwh=5.0, stay_mean_minutes=300.0)
        return generate_days(date(2021, 1, 18), 3, seed=3, profile=profile,
                             skip_weekends=True)

    def test_single_day_equals_run_day(self, tou_prices, small_history):
        days = self._three_days()
        first = min(days)
        cfg = config_for("S2", tou_prices, ports=8)
        history_a = SessionHistory(list(small_history.sessions))
        history_b = SessionHistory(list(small_history.sessions))
        result = run_range({first: days[first]}, [cfg], history_a)
        _, direct = run_day(days[first], cfg, history_b)
        assert result.daily["S2"][0].to_dict() == direct.to_dict()

    def test_cumulative_curves_non_decreasing(self, tou_prices, small_history):
        days = self._three_days()
        cfg = config_for("S2", tou_prices, ports=8)
        result = run_range(days, [cfg], small_history)
        assert np.all(np.diff(result.cumulative_cost("S2")) >= -1e-12)
        assert np.all(np.diff(result.cumulative_delta_emin("S2")) >= -1e-12)
        totals = result.totals("S2")
        assert totals.total_arrivals == sum(len(s) for s in days.values())

    def test_history_rolls_forward(self, tou_prices, small_history):
        days = self._three_days()
        before = len(small_history.sessions)
        run_range(days, [config_for("S1", tou_prices, ports=8)], small_history)
        added = sum(len(s) for s in days.values())
        assert len(small_history.sessions) == before + added
