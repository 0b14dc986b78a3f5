"""Independent oracles for the planner tests.

``enumerate_min_cost`` walks every feasible action sequence of a cap-planning
instance by depth-first search (no value function, no memoization) and
returns the cheapest total cost.  Instance generators produce exact-dyadic
arithmetic (integer steps, prices in quarters) so optimal costs compare
bit-for-bit between the DP and the enumeration.
"""

import math

import numpy as np

GRID_TOL = 1e-7


def enumerate_min_cost(e_init, k0, e_min, e_max, prices_slot, step, amax,
                       b=None, w=0.0):
    """Exhaustive minimum over feasible trajectories; None when infeasible.

    The initial state is taken as given (the floor binds from k0+1 on),
    matching the planner's convention.
    """
    n_p = len(prices_slot)
    if e_init > e_max[k0] + step * GRID_TOL:
        return None
    best = [None]

    def visit(k, e, acc):
        if b is not None and w > 0.0 and k < n_p:
            acc = acc + max(e_max[k] - e, 0.0) / step * (b[k] * w)
        if k == n_p:
            if best[0] is None or acc < best[0]:
                best[0] = acc
            return
        lower = max(math.ceil(max(e_min[k + 1] - e, 0.0) / step - GRID_TOL), 0)
        upper = min(math.floor((e_max[k + 1] - e) / step + GRID_TOL), amax)
        for a in range(lower, upper + 1):
            visit(k + 1, e + a * step, acc + a * step * prices_slot[k])

    visit(k0, e_init, 0.0)
    return best[0]


def random_session_instance(rng, n_p, amax, step=1.0):
    """Feasible S1-style instance built from per-EV feasible stay windows."""
    n_ev = int(rng.integers(1, amax + 1))
    profiles = []
    for _ in range(n_ev):
        request = int(rng.integers(1, 4))
        slack = int(rng.integers(1, 3))
        length = min(request + slack, n_p)
        a = int(rng.integers(0, n_p - length + 1))
        profiles.append((a, a + length, float(request)))
    e_max = np.zeros(n_p + 1)
    e_min = np.zeros(n_p + 1)
    for a, d, r in profiles:
        k = np.arange(n_p + 1)
        pe_max = np.where(k < a, 0.0, np.minimum((k - a) * step, r))
        pe_max = np.where(k > d, r, pe_max)
        pe_min = np.where(k < a, 0.0, np.maximum(r - (d - k) * step, 0.0))
        pe_min = np.where(k > d, r, pe_min)
        e_max += pe_max
        e_min += pe_min
    return e_min, e_max


def random_band_instance(rng, n_p, amax, step=1.0):
    """Monotone integer band anchored at zero (may be infeasible)."""
    inc_max = rng.integers(0, amax + 1, size=n_p)
    e_max = np.concatenate([[0.0], np.cumsum(inc_max)]).astype(float) * step
    slack = rng.integers(0, 4, size=n_p + 1).astype(float) * step
    e_min = np.maximum(e_max - slack, 0.0)
    e_min = np.maximum.accumulate(e_min)
    e_min = np.minimum(e_min, e_max)
    e_min[0] = 0.0
    return e_min, e_max


def random_quarter_prices(rng, n_p):
    """Strictly dyadic prices: multiples of 0.25 in [0.25, 4]."""
    return rng.integers(1, 17, size=n_p).astype(float) * 0.25
