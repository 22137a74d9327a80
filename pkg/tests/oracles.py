"""Slow reference implementations used only as test oracles."""

from __future__ import annotations


import numpy as np

from pyroscale.discrete_ff import FFSimulator, ScriptedSource
from pyroscale.renewal import Dirac, Exponential, ParetoTail, WeibullTail, stream_events


def linear_scan_cluster(occ, i):
    """Maximal occupied run around ``i`` by walking the list, or None."""
    if not occ[i]:
        return None
    l = i
    while l - 1 >= 0 and occ[l - 1]:
        l -= 1
    r = i
    while r + 1 < len(occ) and occ[r + 1]:
        r += 1
    return l, r


def naive_configuration(seeds, matches, t):
    """Occupancy at ``t`` by replaying every event from the empty box.

    ``seeds[i]`` and ``matches[i]`` hold the event times of site ``i``.
    At equal times the seed is applied first.
    """
    n = len(seeds)
    events = []
    for i in range(n):
        events += [(float(s), 0, i) for s in seeds[i] if s <= t]
        events += [(float(m), 1, i) for m in matches[i] if m <= t]
    events.sort()
    occ = [False] * n
    for _, kind, i in events:
        if kind == 0:
            occ[i] = True
        elif occ[i]:
            c = linear_scan_cluster(occ, i)
            for j in range(c[0], c[1] + 1):
                occ[j] = False
    return occ


ORACLE_LAWS = [Dirac(1.0), Exponential(), ParetoTail(2.0), WeibullTail(2.0)]


def scripted_case(rng, half=25, horizon=6.0, match_rate=None):
    """Random seed and match scripts for a box of ``2 half + 1`` sites."""
    n = 2 * half + 1
    law = ORACLE_LAWS[int(rng.integers(len(ORACLE_LAWS)))]
    rate = match_rate if match_rate is not None else float(rng.uniform(0.05, 0.4))
    seeds = [stream_events(law, rng, horizon) for _ in range(n)]
    matches = [np.sort(rng.uniform(0, horizon, rng.poisson(rate * horizon))) for _ in range(n)]
    return law, seeds, matches


def scripted_sim(law, seeds, matches, half):
    return FFSimulator(1.0, 1.0, law, None, 0, seed_source=ScriptedSource(seeds),
                       match_source=ScriptedSource(matches), half_width=half)


def brute_force_beta_cluster(beta, T, delta_b, rng):
    """``|D_T(0)|`` of the polynomial-regime limit built straight from vacancy segments.

    A vacancy segment ``[a, a + l]`` at ``x`` has intensity
    ``dx da beta (beta + 1) l**(-beta - 2) dl``.  Positions holding a segment
    over all of ``[0, T]`` never burn; they form a Poisson process of rate
    ``T**(-beta)``, so the cell of 0 is drawn first and everything else only
    inside it.  Segments shorter than ``delta_b`` are dropped.  After a fire
    at ``rho``, a point is vacant at ``t`` iff one of its segments starts
    before ``rho`` and ends after ``t``.
    """
    rate = T ** (-beta)
    lo, hi = -rng.exponential(1 / rate), rng.exponential(1 / rate)
    w = hi - lo
    n_in = rng.poisson(w * T * beta * delta_b ** (-beta - 1))
    n_out = rng.poisson(w * (beta + 1) * delta_b ** (-beta))
    l_in = delta_b * rng.random(n_in) ** (-1.0 / (beta + 1))
    a_in = rng.uniform(0, T, n_in)
    l_out = delta_b * rng.random(n_out) ** (-1.0 / beta)
    a_out = -l_out * rng.random(n_out)
    start = np.concatenate([a_in, a_out])
    end = start + np.concatenate([l_in, l_out])
    keep = (start > 0) | (end <= T)  # covering segments are the cell ends
    start, end = start[keep], end[keep]
    x = rng.uniform(lo, hi, start.size)
    reset = np.zeros(start.size)
    n_m = rng.poisson(w * T)
    mt = np.sort(rng.uniform(0, T, n_m))
    mx = rng.uniform(lo, hi, n_m)

    def cluster(pos, t):
        vac = (start < reset) & (end > t)
        left = x[vac & (x < pos)]
        right = x[vac & (x > pos)]
        return (left.max() if left.size else lo), (right.min() if right.size else hi)

    for tau, pos in zip(mt, mx):
        l, r = cluster(pos, tau)
        reset[(x > l) & (x < r)] = tau
    l, r = cluster(0.0, T)
    return r - l, hi - lo
