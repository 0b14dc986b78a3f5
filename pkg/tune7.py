"""Scratch harness for shaping the stated-bias comparison corpus."""
import sys
import time
from datetime import date

from evcharge.battery import BMSParams
from evcharge.economic import PricingSchedule
from evcharge.sessions import SessionHistory
from evcharge.simulator import ScenarioConfig, run_range
from evcharge.synthetic import SyntheticProfile, generate_days


def experiment(hourly, profile, seed=1234, eval_days=20, warm_days=15, w=0.0003):
    prices = PricingSchedule(hourly)
    all_days = generate_days(date(2021, 1, 4), warm_days + eval_days, seed=seed,
                             profile=profile, skip_weekends=True)
    dates = sorted(all_days)
    history = SessionHistory()
    for d in dates[:warm_days]:
        history.extend(all_days[d])
    eval_map = {d: all_days[d] for d in dates[warm_days:]}
    cfgs = [ScenarioConfig(scenario=s, bms=BMSParams(), port_count=54,
                           prices=prices, w=w) for s in ("S1", "S2")]
    res = run_range(eval_map, cfgs, history)
    t1, t2 = res.totals("S1"), res.totals("S2")
    gap = 100 * abs(t2.total_cost - t1.total_cost) / t1.total_cost
    print(f"S1 cost={t1.total_cost:8.2f} demin={t1.delta_e_min:9.0f} "
          f"del={t1.delivered_kwh:6.0f}/{t1.requested_kwh:6.0f} full={t1.fully_served}")
    print(f"S2 cost={t2.total_cost:8.2f} demin={t2.delta_e_min:9.0f} "
          f"del={t2.delivered_kwh:6.0f}/{t2.requested_kwh:6.0f} full={t2.fully_served}")
    print(f"cost gap {gap:.2f}%  demin ratio {t2.delta_e_min / max(t1.delta_e_min, 1e-9):.3f}")
    return gap, t2.delta_e_min < t1.delta_e_min


PROFILES = {
    "base": SyntheticProfile(
        stated_bias_minutes=150.0, stated_noise_minutes=10.0,
        stay_mean_minutes=390.0, stay_sd_minutes=45.0,
        energy_mean_kwh=6.5, energy_sd_kwh=2.0, energy_max_kwh=12.0),
    # morning bulk that fits inside the cheap tier plus a small late tail
    "tail": SyntheticProfile(
        hourly_rates=(0, 0, 0, 0, 0, 0, 2.0, 10.0, 8.0, 0.7, 0.7, 0.7,
                      0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0),
        stated_bias_minutes=150.0, stated_noise_minutes=10.0,
        stay_mean_minutes=390.0, stay_sd_minutes=45.0,
        energy_mean_kwh=6.5, energy_sd_kwh=2.0, energy_max_kwh=12.0),
}

HOURLIES = {
    # morning-cheap so the bulk is bought early; mild afternoon shoulder
    "a": (0.08,)*6 + (0.10,)*5 + (0.14,)*3 + (0.12,)*4 + (0.13,)*4 + (0.09,)*2,
    # flat-ish: separation driven purely by deferral-to-stated-floor ties
    "b": (0.10,)*24,
    # gently increasing through the afternoon
    "c": (0.08,)*6 + (0.10,)*4 + (0.12,)*4 + (0.13,)*4 + (0.14,)*4 + (0.10,)*2,
    # micro-gradients: strictly rising mornings (buy on arrival), strictly
    # falling afternoons (defer to the believed deadline ramp)
    "micro": tuple([0.09] * 6
                   + [0.1000 + 0.0001 * i for i in range(4)]          # 6-9
                   + [0.1380 - 0.0001 * i for i in range(11)]         # 10-20
                   + [0.15] * 3),
}

if __name__ == "__main__":
    t0 = time.time()
    for name in sys.argv[1:] or ["a"]:
        print(f"--- price curve {name!r}")
        experiment(HOURLIES[name], PROFILES["base"])
    print("elapsed", round(time.time() - t0, 1))
