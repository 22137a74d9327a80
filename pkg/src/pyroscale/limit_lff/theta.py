"""Regeneration heights of microscopic fires in the bounded-support regime.

A zone is emptied, seeds grow for a rescaled time ``u``, and a match then
burns the cluster of the origin.  ``theta_u`` is the law of the rescaled time
that passes before every site of that cluster has been seeded again.  Its CDF
on ``[0, 1]`` is

    q0 + (q0 / (1 - g(u, h)))**2 * g(u, h),   with q0 = nu((T u, T)),

where ``g(t, s)`` is the probability that a stream has an event in
``(0, T t]`` and another one in ``(T t, T (t + s)]``.
"""

from __future__ import annotations

import math

import numpy as np

from ..renewal import Dirac, Law, RegimeError


def _require_bs(law: Law) -> None:
    if law.regime.kind != "BS":
        raise RegimeError(f"theta is only defined for bounded support laws, not {law.regime}")


def g_S_mc(law: Law, t: float, s: float, rng: np.random.Generator, n: int = 10**6):
    """Monte Carlo estimate of ``g(t, s)`` and its standard error."""
    _require_bs(law)
    T = law.T
    first = np.asarray(law.sample_nu(rng, n), dtype=float)
    hit = first <= T * t
    nxt = law.advance(first, T * t, rng)
    ok = hit & (nxt <= T * (t + s))
    p = float(ok.mean())
    return p, math.sqrt(p * (1.0 - p) / n)


def g_S(law: Law, t: float, s: float, rng: np.random.Generator | None = None,
        n: int = 10**6) -> float:
    """``g(t, s)``; exact for Dirac laws, Monte Carlo otherwise."""
    _require_bs(law)
    if t <= 0 or s <= 0:
        return 0.0
    if isinstance(law, Dirac):
        return max(0.0, min(t, 1.0) + min(s, 1.0) - 1.0)
    return g_S_mc(law, t, s, np.random.default_rng(0) if rng is None else rng, n)[0]


def theta_cdf(law: Law, u: float, h: float) -> float:
    """``theta_u([0, h])``."""
    _require_bs(law)
    if h >= 1.0:
        return 1.0
    q0 = float(law.tail_nu(law.T * u))
    g = g_S(law, u, h)
    return q0 + (q0 / (1.0 - g)) ** 2 * g


def theta_inverse(law: Law, u: float, v: float) -> float:
    """Generalised inverse ``inf{h in [0, 1] : theta_u([0, h]) >= v}``."""
    _require_bs(law)
    if isinstance(law, Dirac):
        return dirac_theta_inverse(u, v)
    lo, hi = 0.0, 1.0
    if theta_cdf(law, u, 0.0) >= v:
        return 0.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if theta_cdf(law, u, mid) >= v:
            hi = mid
        else:
            lo = mid
    return hi


def dirac_theta_inverse(u: float, v: float) -> float:
    # there g(u, h) = u + h - 1 beyond the atom at 0, so the CDF equation
    # g / (1 - g)**2 = c is a quadratic in g
    q0 = 1.0 - u
    if v <= q0:
        return 0.0
    if q0 <= 0.0:
        return 1.0
    c = (v - q0) / (q0 * q0)
    g = 2.0 * c / ((2.0 * c + 1.0) + math.sqrt(4.0 * c + 1.0))
    return min(1.0, g + q0)


def regeneration_times(law: Law, a: float, u: float, rng: np.random.Generator,
                       size: int, width: int = 64, batch: int = 20000) -> np.ndarray:
    """Direct simulation of the regeneration experiment, in units of ``a``.

    Every site of the line carries an independent stationary stream started at
    time 0 with the zone empty.  At time ``a u`` the occupied run containing 0
    is burnt; the result is the time until its last site is seeded again,
    divided by ``a`` (0 when the origin is vacant).
    """
    out = np.empty(size)
    done = 0
    horizon = a * u
    while done < size:
        m = min(batch, size - done)
        out[done:done + m] = _regen_batch(law, horizon, a, rng, m, width)
        done += m
    return out


def _regen_batch(law, horizon, a, rng, m, width):
    res = np.zeros(m)
    first0 = np.asarray(law.sample_nu(rng, m), dtype=float)
    occ0 = first0 <= horizon
    best = np.where(occ0, law.advance(first0, horizon, rng) - horizon, 0.0)
    # walk out from the origin on each side by blocks of sites
    for _side in (0, 1):
        active = np.flatnonzero(occ0)
        while active.size:
            first = np.asarray(law.sample_nu(rng, active.size * width), dtype=float).reshape(active.size, width)
            occ = first <= horizon
            run = np.cumprod(occ, axis=1).astype(bool)
            resid = np.zeros_like(first)
            resid[run] = law.advance(first[run], horizon, rng) - horizon
            best[active] = np.maximum(best[active], resid.max(axis=1))
            active = active[run[:, -1]]
    res[:] = best / a
    return res


def sample_theta(law: Law, u: float, method: str = "inverse", rng: np.random.Generator | None = None,
                 size: int | None = None):
    """Draw regeneration heights for a microscopic fire at density ``u``.

    Parameters
    ----------
    method : {"inverse", "regeneration"}
        ``inverse`` inverts the closed CDF at a uniform variable.
        ``regeneration`` runs the underlying seed experiment directly.
    """
    _require_bs(law)
    if not 0 < u < 1:
        raise ValueError("u must lie in (0, 1)")
    rng = np.random.default_rng() if rng is None else rng
    n = 1 if size is None else size
    if method == "inverse":
        v = rng.random(n)
        if isinstance(law, Dirac):
            out = _dirac_inverse_vec(u, v)
        else:
            out = np.array([theta_inverse(law, u, x) for x in v])
    elif method == "regeneration":
        out = regeneration_times(law, law.T, u, rng, n)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out[0]) if size is None else out


def _dirac_inverse_vec(u: float, v: np.ndarray) -> np.ndarray:
    q0 = 1.0 - u
    c = np.maximum(v - q0, 0.0) / (q0 * q0)
    g = 2.0 * c / ((2.0 * c + 1.0) + np.sqrt(4.0 * c + 1.0))
    return np.where(v <= q0, 0.0, np.minimum(1.0, g + q0))


def sample_theta_lambda(law: Law, a_lambda: float, t0: float, t1: float,
                        rng: np.random.Generator, size: int) -> np.ndarray:
    """Finite-lambda regeneration time for a zone emptied at ``t0`` and burnt at ``t1``.

    The streams seen from time ``a t0`` on are again stationary, so only
    ``t1 - t0`` matters.  Values are not capped at 1.
    """
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    return regeneration_times(law, a_lambda, t1 - t0, rng, size)
