"""Finite-box discrete forest-fire process.

Sites ``-A_l..A_l`` (with ``A_l = floor(A n_lambda)``) receive seeds from
independent stationary renewal streams, and matches from independent
stationary streams slowed down by ``1/lambda``.  A seed on a vacant site
occupies it.  A match on an occupied site vacates the whole occupied run
around it, clipped to the box.

The engine is driven by matches only.  For each site it keeps the time of the
first seed since the site was last burnt, so a site is occupied at time ``t``
iff that time is ``<= t``.  Seeds in between carry no information.  This makes
growth free, and a fire costs time proportional to the burnt run.  When a seed
and a match fall at the same instant the seed counts first.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .renewal import Exponential, Law
from .rng import as_generator
from .scaling import ScaleSet, compute_scales


class CapacityError(MemoryError):
    """Raised when a box would not fit in the memory budget."""


BYTES_PER_SITE = 24


class RenewalSource:
    """Lazily sampled stationary streams, one per site, time-scaled by ``scale``."""

    def __init__(self, law: Law, rng: np.random.Generator, n: int, scale: float = 1.0):
        self.law = law
        self.rng = rng
        self.n = n
        self.scale = scale

    def first(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.scale * np.asarray(self.law.sample_nu(self.rng, self.n), dtype=float)

    def step(self, idx: np.ndarray, cur: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return cur + self.scale * self.law.sample_mu(self.rng, idx.size)

    def advance(self, idx: np.ndarray, cur: np.ndarray, tau: float) -> np.ndarray:
        if self.scale == 1.0:
            return self.law.advance(cur, tau, self.rng)
        return self.scale * self.law.advance(cur / self.scale, tau / self.scale, self.rng)


class ScriptedSource:
    """Streams given explicitly as one increasing array of times per site."""

    def __init__(self, times: list[np.ndarray]):
        self.times = [np.asarray(t, dtype=float) for t in times]
        self.n = len(self.times)

    def _after(self, i: int, tau: float) -> float:
        arr = self.times[i]
        k = np.searchsorted(arr, tau, side="right")
        return float(arr[k]) if k < arr.size else math.inf

    def first(self) -> np.ndarray:
        return np.array([t[0] if t.size else math.inf for t in self.times])

    def step(self, idx, cur):
        return np.array([self._after(i, c) for i, c in zip(idx, cur)])

    def advance(self, idx, cur, tau):
        return np.array([self._after(i, tau) if c <= tau else c for i, c in zip(idx, cur)])


@dataclass(frozen=True)
class Fire:
    time: float
    site: int
    left: int
    right: int

    @property
    def size(self) -> int:
        return self.right - self.left + 1


class FFSimulator:
    """One trajectory of the boxed discrete process.

    Sites are addressed by their lattice label ``i`` in ``-A_l..A_l``.
    """

    def __init__(self, A: float, lam: float, seed_law: Law, match_law: Law | None = None,
                 rng=None, *, fires: bool = True, scales: ScaleSet | None = None,
                 seed_source=None, match_source=None, half_width: int | None = None,
                 record_trace: bool = False, memory_budget: int = 2**31):
        if not A > 0:
            raise ValueError("A must be positive")
        if not 0 < lam <= 1:
            raise ValueError("lambda must lie in (0, 1]")
        self.seed_law = seed_law
        self.match_law = Exponential() if match_law is None else match_law
        self.lam = lam
        self.A = A
        self.scales = compute_scales(seed_law, lam) if scales is None else scales
        self.half = int(math.floor(A * self.scales.n_lambda)) if half_width is None else half_width
        self.size = 2 * self.half + 1
        if self.size * BYTES_PER_SITE > memory_budget:
            raise CapacityError(f"box of {self.size} sites exceeds the memory budget")
        rng = as_generator(rng)
        seed_rng, match_rng = rng.spawn(2)
        self.seeds = seed_source or RenewalSource(seed_law, seed_rng, self.size)
        self.match_src = match_source or RenewalSource(self.match_law, match_rng, self.size,
                                                       scale=1.0 / lam)
        self.fires_enabled = fires
        self.now = 0.0
        self.nxt = self.seeds.first()
        self._nm = self.match_src.first()
        self._mq_t = np.empty(0)
        self._mq_s = np.empty(0, dtype=np.int64)
        self._mq_pos = 0
        self._mh = 0.0
        self.fire_log: list[Fire] = []
        self.match_log: list[tuple[float, int]] = []
        self.record_trace = record_trace
        self._seed_log: list[tuple[np.ndarray, np.ndarray]] = []

    # match queue
    def _generate_matches(self, h: float) -> None:
        ts, ss = [], []
        idx = np.flatnonzero(self._nm <= h)
        while idx.size:
            ts.append(self._nm[idx].copy())
            ss.append(idx)
            self._nm[idx] = self.match_src.step(idx, self._nm[idx])
            idx = idx[self._nm[idx] <= h]
        rest_t = self._mq_t[self._mq_pos:]
        rest_s = self._mq_s[self._mq_pos:]
        t = np.concatenate([rest_t] + ts)
        s = np.concatenate([rest_s] + ss).astype(np.int64)
        order = np.lexsort((s, t))
        self._mq_t, self._mq_s, self._mq_pos = t[order], s[order], 0
        self._mh = h

    def pending_matches(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Match events in ``(now, t]`` as (times, site labels), without processing them."""
        if t > self._mh:
            self._generate_matches(t)
        stop = np.searchsorted(self._mq_t, t, side="right")
        sl = slice(self._mq_pos, stop)
        return self._mq_t[sl], self._mq_s[sl] - self.half

    # dynamics
    def run_until(self, t: float) -> None:
        t = float(t)
        if t < self.now:
            raise ValueError("cannot run backwards in time")
        if t > self._mh:
            self._generate_matches(t)
        nxt = self.nxt
        qt, qs = self._mq_t, self._mq_s
        k = self._mq_pos
        stop = int(np.searchsorted(qt, t, side="right"))
        while k < stop:
            tau = float(qt[k])
            j = int(qs[k])
            k += 1
            self.match_log.append((tau, j - self.half))
            if self.fires_enabled and nxt[j] <= tau:
                self._burn(j, tau)
        self._mq_pos = k
        self.now = t

    def _left_end(self, j: int, tau: float) -> int:
        nxt = self.nxt
        i, w = j, 32
        while i > 0:
            lo = max(0, i - w)
            vac = np.flatnonzero(nxt[lo:i] > tau)
            if vac.size:
                return lo + int(vac[-1]) + 1
            i, w = lo, 4 * w
        return 0

    def _right_end(self, j: int, tau: float) -> int:
        nxt = self.nxt
        i, w, n = j + 1, 32, self.size
        while i < n:
            hi = min(n, i + w)
            vac = np.flatnonzero(nxt[i:hi] > tau)
            if vac.size:
                return i + int(vac[0]) - 1
            i, w = hi, 4 * w
        return n - 1

    def _burn(self, j: int, tau: float) -> None:
        l, r = self._left_end(j, tau), self._right_end(j, tau)
        seg = self.nxt[l:r + 1]
        if self.record_trace:
            self._seed_log.append((seg.copy(), np.arange(l, r + 1)))
        self.nxt[l:r + 1] = self.seeds.advance(np.arange(l, r + 1), seg, tau)
        self.fire_log.append(Fire(tau, j - self.half, l - self.half, r - self.half))

    # observables at the current time
    def occupancy(self) -> np.ndarray:
        return self.nxt <= self.now

    def is_occupied(self, i: int) -> bool:
        return bool(self.nxt[i + self.half] <= self.now)

    def cluster(self, i: int) -> tuple[int, int] | None:
        """Maximal occupied run containing site ``i`` (clipped to the box), or None."""
        j = i + self.half
        if not 0 <= j < self.size:
            raise IndexError(f"site {i} outside the box")
        if self.nxt[j] > self.now:
            return None
        return self._left_end(j, self.now) - self.half, self._right_end(j, self.now) - self.half

    def cluster_size(self, i: int = 0) -> int:
        c = self.cluster(i)
        return 0 if c is None else c[1] - c[0] + 1

    # exports
    def snapshot_rle(self) -> str:
        """Occupancy as ``time<TAB>first-site<TAB>runs`` with runs like ``0x12 1x5``."""
        occ = self.occupancy().astype(np.int8)
        cuts = np.flatnonzero(np.diff(occ)) + 1
        starts = np.concatenate([[0], cuts])
        ends = np.concatenate([cuts, [occ.size]])
        runs = " ".join(f"{occ[s]}x{e - s}" for s, e in zip(starts, ends))
        return f"{self.now!r}\t{-self.half}\t{runs}"

    def trace_rows(self) -> list[tuple]:
        """Event rows ``(event_time, kind, site, fire_left, fire_right)``.

        ``seed`` rows are the seeds that actually occupied a vacant site.  A
        match on a vacant site is a ``match`` row, one on an occupied site a
        ``fire`` row with the burnt interval.
        """
        if not self.record_trace:
            raise RuntimeError("trace recording was not enabled")
        rows = []
        for times, sites in self._seed_log:
            rows.extend((float(t), 0, "seed", int(s) - self.half, "", "") for t, s in zip(times, sites))
        live = np.flatnonzero(self.nxt <= self.now)
        rows.extend((float(self.nxt[s]), 0, "seed", int(s) - self.half, "", "") for s in live)
        fires = {(f.time, f.site): f for f in self.fire_log}
        for t, s in self.match_log:
            f = fires.get((t, s))
            if f is None:
                rows.append((t, 1, "match", s, "", ""))
            else:
                rows.append((t, 1, "fire", s, f.left, f.right))
        rows.sort(key=lambda r: (r[0], r[1], r[3]))
        return [(r[0], r[2], r[3], r[4], r[5]) for r in rows]

    def write_trace(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["event_time", "kind", "site", "fire_left", "fire_right"])
        for t, kind, site, left, right in self.trace_rows():
            w.writerow([repr(float(t)), kind, site, left, right])

    def trace_csv(self) -> str:
        buf = io.StringIO()
        self.write_trace(buf)
        return buf.getvalue()


def new_ff(A: float, lam: float, seed_law: Law, match_law: Law | None = None, rng=None,
           **kwargs) -> FFSimulator:
    """Empty boxed process with stationary seed and match streams."""
    return FFSimulator(A, lam, seed_law, match_law, rng, **kwargs)


def run_until(sim: FFSimulator, t: float) -> None:
    sim.run_until(t)


def cluster(sim: FFSimulator, i: int):
    return sim.cluster(i)


def rescaled_cluster(sim: FFSimulator, scales: ScaleSet, x: float, t: float):
    """Cluster of site ``floor(n x)`` at time ``a t``, in rescaled space units."""
    target = scales.a_lambda * t
    if target > sim.now:
        sim.run_until(target)
    c = sim.cluster(int(math.floor(scales.n_lambda * x)))
    if c is None:
        return None
    return c[0] / scales.n_lambda, c[1] / scales.n_lambda


def local_density_Z(sim: FFSimulator, scales: ScaleSet, x: float, t: float) -> float:
    """Occupied fraction over the mesoscopic window, mapped through ``psi`` and capped at 1."""
    if scales.m_lambda is None:
        raise ValueError("local density needs a BS or infinity regime")
    target = scales.a_lambda * t
    if target > sim.now:
        sim.run_until(target)
    c = int(math.floor(scales.n_lambda * x)) + sim.half
    lo = max(0, c - scales.m_lambda)
    hi = min(sim.size, c + scales.m_lambda + 1)
    if lo >= hi:
        raise ValueError("window does not meet the box")
    k = float(np.mean(sim.nxt[lo:hi] <= sim.now))
    if k >= 1.0:
        return 1.0
    return min(sim.seed_law.psi(k) / scales.a_lambda, 1.0)


def kingman_isf(u):
    """Inverse survival of the occupation time with ``P(T > t) = 2 / (t + 2)``."""
    return 2.0 / np.asarray(u, dtype=float) - 2.0


class PercolationSim:
    """Site percolation on the box with i.i.d. occupation times, no fires.

    Several independent boxes (``replicas``) are held in one array, one per row.
    Edge ``(i, i+1)`` belongs to a particle whose mass is one plus the number of
    occupied sites glued to it on either side.
    """

    def __init__(self, A: float, n: int, rng=None, occupation_isf=kingman_isf, replicas: int = 1):
        rng = as_generator(rng)
        self.half = int(math.floor(A * n))
        self.size = 2 * self.half + 1
        u = 1.0 - rng.random((replicas, self.size))
        self.times = occupation_isf(u)

    def occupancy(self, t: float) -> np.ndarray:
        return self.times <= t

    def edge_masses(self, t: float) -> np.ndarray:
        """Mass of the particle of every edge ``(i, i+1)`` inside the box, shape (replicas, size-1)."""
        occ = self.occupancy(t)
        r, n = occ.shape
        # run lengths of occupied sites ending at / starting at each position
        left = np.zeros((r, n), dtype=np.int64)
        right = np.zeros((r, n), dtype=np.int64)
        acc = np.zeros(r, dtype=np.int64)
        for i in range(n):
            acc = np.where(occ[:, i], acc + 1, 0)
            left[:, i] = acc
        acc[:] = 0
        for i in range(n - 1, -1, -1):
            acc = np.where(occ[:, i], acc + 1, 0)
            right[:, i] = acc
        return 1 + left[:, :-1] + right[:, 1:]

    def edge_mass(self, t: float, i: int = 0) -> np.ndarray:
        """Mass of the particle of edge ``(i, i+1)`` in every replica."""
        occ = self.occupancy(t)
        j = i + self.half
        m = np.ones(occ.shape[0], dtype=np.int64)
        alive = np.ones(occ.shape[0], dtype=bool)
        for k in range(j, -1, -1):
            alive &= occ[:, k]
            if not alive.any():
                break
            m += alive
        alive[:] = True
        for k in range(j + 1, self.size):
            alive &= occ[:, k]
            if not alive.any():
                break
            m += alive
        return m


def percolation_mode(A: float, n: int, occupation_isf=kingman_isf, rng=None,
                     replicas: int = 1) -> PercolationSim:
    return PercolationSim(A, n, rng, occupation_isf, replicas)
