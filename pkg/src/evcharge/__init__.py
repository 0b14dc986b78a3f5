"""Two-layer predictive charging control for workplace EV stations.

An adaptive non-parametric load predictor feeds an economic
dynamic-programming layer that sets per-cycle grid-power caps; a priority
scheduler switches charge ports ON/OFF under those caps; batteries follow
a taper model.  See the README for the module map.
"""

from .battery import (BMSParams, EVChargeState, StationState, bms_power, ideal_battery,
                      simulate_full_charge, step_charge)
from .economic import (DpCostModelS2, LoadPolicy, PlannerEV, PricingSchedule,
                       dp_policy_s1, dp_policy_s2, expected_departed_count, replan,
                       solve_policy)
from .envelope import (EnergyEnvelope, aggregate_envelope, decision_space,
                       envelope_profile, per_ev_envelope, sessions_envelope)
from .kde import Kde1D, silverman_bandwidth
from .predictor import (ArrivalModel, PredictionSet, SlotConditionalModel, adapt_count,
                        build_prediction_set, expected_arrivals_in_slot, fit_arrival_model,
                        fit_kde, fit_slot_models, initial_daily_count)
from .scheduler import PriorityLedger, ScheduleDecision, accumulate_priority, fcfs_select, select
from .sessions import (ChargingSession, SessionHistory, SlotClock, group_by_day,
                       parse_sessions_csv, parse_sessions_json, slot_of, write_sessions_csv)
from .simulator import (DayTrace, Metrics, RangeResult, ScenarioConfig, compute_delta_emin,
                        run_day, run_offline_s3, run_range)
from .synthetic import SyntheticProfile, generate_day, generate_days

__version__ = "0.1.0"

__all__ = [
    "BMSParams", "EVChargeState", "StationState", "bms_power", "ideal_battery",
    "simulate_full_charge", "step_charge",
    "DpCostModelS2", "LoadPolicy", "PlannerEV", "PricingSchedule",
    "dp_policy_s1", "dp_policy_s2", "expected_departed_count", "replan", "solve_policy",
    "EnergyEnvelope", "aggregate_envelope", "decision_space", "envelope_profile",
    "per_ev_envelope", "sessions_envelope",
    "Kde1D", "silverman_bandwidth",
    "ArrivalModel", "PredictionSet", "SlotConditionalModel", "adapt_count",
    "build_prediction_set", "expected_arrivals_in_slot", "fit_arrival_model",
    "fit_kde", "fit_slot_models", "initial_daily_count",
    "PriorityLedger", "ScheduleDecision", "accumulate_priority", "fcfs_select", "select",
    "ChargingSession", "SessionHistory", "SlotClock", "group_by_day",
    "parse_sessions_csv", "parse_sessions_json", "slot_of", "write_sessions_csv",
    "DayTrace", "Metrics", "RangeResult", "ScenarioConfig", "compute_delta_emin",
    "run_day", "run_offline_s3", "run_range",
    "SyntheticProfile", "generate_day", "generate_days",
]
