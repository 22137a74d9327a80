"""Limit process in the polynomial regime, by its graphical construction.

Vacancy marks are points ``(x, u)`` of a Poisson cloud.  Here ``u`` is how
long the site stays vacant after the level at which the cloud was laid down.
In the variable ``L = u**(-beta)`` the cloud has intensity ``dx dL``.  A point
born at ``rho`` is alive at ``t`` iff ``L < (t - rho)**(-beta)``.

* The initial cloud, born at time 0, covers the whole line.
* A match at ``(rho, alpha)`` burns the interval ``I`` between the nearest
  alive points around ``alpha``.  It then lays a fresh cloud on the interior
  of ``I``.  At a position whose previous cloud was born at ``r``, only marks
  that started in ``(r, rho)`` can be there.  So the fresh intensity is thinned
  by ``1 - (u / (u + rho - r))**(beta + 1)``.  For the initial cloud
  ``rho - r`` is infinite and nothing is thinned.

Clouds are sampled lazily by deterministic blocks of ``(x, L)`` space:
dyadic ``L``-slabs, each cut in ``x`` into blocks of about 64 expected
points.  Every block has its own seed, so results do not depend on the order
of the queries.  Marks shorter than ``delta`` are dropped, which only matters
for queries less than ``delta`` after a fire.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from ..rng import child_seed

BLOCK_POINTS_LOG2 = 6


def _slab_bounds(j: int) -> tuple[float, float]:
    if j == 0:
        return 0.0, 1.0
    return float(2 ** (j - 1)), float(2**j)


def _slab_width(j: int) -> float:
    # about 2**BLOCK_POINTS_LOG2 expected points per block
    return 2.0 ** -max(0, j - 1 - BLOCK_POINTS_LOG2)


def _zigzag(b: int) -> int:
    return 2 * b if b >= 0 else -2 * b - 1


class VacancyCloud:
    """Lazily sampled Poisson cloud of vacancy marks on ``(lo, hi)``.

    ``deltas`` is a pair ``(edges, values)`` giving the time since the
    previous regeneration on each piece ``(edges[i], edges[i+1])``, or None
    when nothing is thinned.
    """

    def __init__(self, birth: float, beta: float, lo: float, hi: float, seed: int,
                 cap: float, deltas: tuple[np.ndarray, np.ndarray] | None = None):
        self.birth = birth
        self.beta = beta
        self.lo, self.hi = lo, hi
        self.seed = seed
        self.deltas = deltas
        self.set_cap(cap)
        self._blocks: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def set_cap(self, cap: float) -> None:
        """Drop marks with ``L >= cap``; block contents do not depend on it."""
        self.cap = cap
        self.max_slab = int(math.floor(math.log2(cap))) + 1 if cap > 1 else 0
        self.min_life = cap ** (-1.0 / self.beta)

    def _block(self, j: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        key = (j, b)
        got = self._blocks.get(key)
        if got is not None:
            return got
        rng = np.random.default_rng([self.seed, j, _zigzag(b)])
        w = _slab_width(j)
        l0, l1 = _slab_bounds(j)
        n = int(rng.poisson(w * (l1 - l0)))
        x = (b + rng.random(n)) * w
        lam = l0 + rng.random(n) * (l1 - l0)
        keep_u = rng.random(n)
        inside = (x > self.lo) & (x < self.hi)
        if self.deltas is not None:
            edges, vals = self.deltas
            k = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, vals.size - 1)
            d = vals[k]
            u = lam ** (-1.0 / self.beta)
            inside &= keep_u < 1.0 - (u / (u + d)) ** (self.beta + 1.0)
        x, lam = x[inside], lam[inside]
        order = np.argsort(x)
        with np.errstate(divide="ignore"):
            death = self.birth + lam[order] ** (-1.0 / self.beta)
        got = (x[order], death)
        self._blocks[key] = got
        return got

    def _slabs(self, t: float) -> tuple[list[int], float]:
        """Slabs holding points alive at ``t``, fully alive ones first; and the
        effective time threshold on death times."""
        lag = t - self.birth
        lcut = math.inf if lag <= 0 else lag ** (-self.beta)
        top = 0
        while top < self.max_slab and _slab_bounds(top + 1)[0] < lcut:
            top += 1
        return list(range(top - 1, -1, -1)) + [top], max(t, self.birth + self.min_life)

    def nearest_left(self, x: float, t: float, bound: float) -> tuple[float, float] | None:
        """Rightmost point alive at ``t`` with position in ``(bound, x]``."""
        slabs, t = self._slabs(t)
        best: tuple[float, float] | None = None
        floor_ = max(bound, self.lo)
        for j in slabs:
            w = _slab_width(j)
            b = math.floor(x / w)
            while True:
                left_edge = b * w
                if (best is not None and (b + 1) * w <= best[0]) or (b + 1) * w <= floor_:
                    break
                xs, death = self._block(j, b)
                m = (xs <= x) & (xs > floor_) & (death > t)
                if best is not None:
                    m &= xs > best[0]
                idx = np.flatnonzero(m)
                if idx.size:
                    k = idx[-1]
                    best = (float(xs[k]), float(death[k]))
                    break
                if left_edge <= floor_:
                    break
                b -= 1
        return best

    def nearest_right(self, x: float, t: float, bound: float) -> tuple[float, float] | None:
        """Leftmost point alive at ``t`` with position in ``[x, bound)``."""
        slabs, t = self._slabs(t)
        best: tuple[float, float] | None = None
        ceil_ = min(bound, self.hi)
        for j in slabs:
            w = _slab_width(j)
            b = math.floor(x / w)
            while True:
                if (best is not None and b * w >= best[0]) or b * w >= ceil_:
                    break
                xs, death = self._block(j, b)
                m = (xs >= x) & (xs < ceil_) & (death > t)
                if best is not None:
                    m &= xs < best[0]
                idx = np.flatnonzero(m)
                if idx.size:
                    k = idx[0]
                    best = (float(xs[k]), float(death[k]))
                    break
                if (b + 1) * w >= ceil_:
                    break
                b += 1
        return best

    def alive(self, a: float, b: float, t: float) -> tuple[np.ndarray, np.ndarray]:
        """All points in ``(a, b)`` alive at ``t``, as (positions, death times)."""
        slabs, t = self._slabs(t)
        a, b = max(a, self.lo), min(b, self.hi)
        px, pd = [], []
        if a >= b:
            return np.empty(0), np.empty(0)
        for j in sorted(slabs):
            w = _slab_width(j)
            for blk in range(math.floor(a / w), math.floor(b / w) + 1):
                xs, death = self._block(j, blk)
                m = (xs > a) & (xs < b) & (death > t)
                px.append(xs[m])
                pd.append(death[m])
        x = np.concatenate(px)
        order = np.argsort(x)
        return x[order], np.concatenate(pd)[order]

    def count_alive(self, a: float, b: float, t: float) -> int:
        return int(self.alive(a, b, t)[0].size)


def fresh_cloud_count(beta: float, length: float, lag: float, rng: np.random.Generator,
                      since_previous: float = math.inf, delta: float = 1e-3) -> int:
    """Number of alive marks at ``lag`` after a regeneration of an interval of ``length``.

    ``since_previous`` is the time since the previous regeneration of the
    interval.  The default (infinite) gives a Poisson count with mean
    ``length * lag**(-beta)``.
    """
    deltas = None
    if math.isfinite(since_previous):
        deltas = (np.array([0.0]), np.array([since_previous]))
    cloud = VacancyCloud(0.0, beta, 0.0, length, child_seed(rng), delta ** (-beta), deltas)
    return cloud.count_alive(0.0, length, lag)


@dataclass
class BetaFire:
    time: float
    position: float
    left: float
    right: float


class CoverageMap:
    """Which cloud owns each piece of the simulated region.

    Breakpoints are alive vacancy points (with their death times).
    Open intervals between breakpoints carry the id of the cloud on them.
    """

    def __init__(self, left: float, dl: float, right: float, dr: float):
        self.pts = [left, right]
        self.death = [dl, dr]
        self.own = [0]

    def copy(self) -> "CoverageMap":
        c = CoverageMap.__new__(CoverageMap)
        c.pts, c.death, c.own = list(self.pts), list(self.death), list(self.own)
        return c

    def insert(self, x: float, death: float) -> int:
        i = bisect_right(self.pts, x) - 1
        if self.pts[i] == x:
            return i
        self.pts.insert(i + 1, x)
        self.death.insert(i + 1, death)
        self.own.insert(i + 1, self.own[i])
        return i + 1

    def assign(self, a: float, b: float, da: float, db: float, owner: int) -> None:
        ia = self.insert(a, da)
        ib = self.insert(b, db)
        del self.pts[ia + 1:ib]
        del self.death[ia + 1:ib]
        del self.own[ia + 1:ib]
        self.own[ia] = owner

    def pieces(self, a: float, b: float) -> list[tuple[float, float, int]]:
        out = []
        i = max(0, bisect_right(self.pts, a) - 1)
        while i < len(self.own) and self.pts[i] < b:
            lo, hi = max(self.pts[i], a), min(self.pts[i + 1], b)
            if hi > lo:
                out.append((lo, hi, self.own[i]))
            i += 1
        return out


class BetaTrajectory:
    """Trajectory of the polynomial-regime limit process on ``[0, T] x [-A, A]``."""

    def __init__(self, A: float, T: float, beta: float, rng: np.random.Generator,
                 delta: float | None = None):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.A, self.T, self.beta = A, T, beta
        master = child_seed(rng)
        self._rng = np.random.default_rng([master, 1])
        self._cloud_seed = master
        cap0 = (1e-3 if delta is None else delta) ** (-beta)
        init = VacancyCloud(0.0, beta, -math.inf, math.inf, self._seed_for(0), cap0)
        self.clouds = [init]
        # cell boundaries: initial marks alive over all of [0, T]
        left = init.nearest_left(-A, T, -math.inf)
        right = init.nearest_right(A, T, math.inf)
        self.chi = (left[0], right[0])
        width = self.chi[1] - self.chi[0]
        n = int(self._rng.poisson(width * T))
        times = np.sort(self._rng.uniform(0.0, T, n))
        pos = self._rng.uniform(self.chi[0], self.chi[1], n)
        self.match_times, self.match_pos = times, pos
        if delta is None:
            gap = float(np.min(np.diff(times))) if n > 1 else math.inf
            delta = min(1e-3, 0.5 * gap) if n else 1e-3
            if n:
                delta = min(delta, 0.5 * float(times[0]))
        self.delta = delta
        self.cap = delta ** (-beta)
        init.set_cap(self.cap)
        cov = CoverageMap(left[0], left[1], right[0], right[1])
        self.snap_times = [0.0]
        self.snaps = [cov.copy()]
        self.fires: list[BetaFire] = []
        for tau, a in zip(times.tolist(), pos.tolist()):
            (l, dl), (r, dr) = self._cluster(cov, a, tau)
            deltas = self._deltas(cov, l, r, tau)
            cloud = VacancyCloud(tau, beta, l, r, self._seed_for(len(self.clouds)), self.cap, deltas)
            self.clouds.append(cloud)
            cov.assign(l, r, dl, dr, len(self.clouds) - 1)
            self.fires.append(BetaFire(tau, a, l, r))
            self.snap_times.append(tau)
            self.snaps.append(cov.copy())

    def _seed_for(self, k: int) -> int:
        return int(np.random.SeedSequence([self._cloud_seed, 2, k]).generate_state(1, np.uint64)[0])

    def _deltas(self, cov: CoverageMap, l: float, r: float, tau: float):
        edges, vals = [], []
        for lo, hi, owner in cov.pieces(l, r):
            edges.append(lo)
            vals.append(tau - self.clouds[owner].birth)
        return np.array(edges), np.array(vals)

    def _cluster(self, cov: CoverageMap, x: float, t: float):
        pts, death, own = cov.pts, cov.death, cov.own
        i = bisect_right(pts, x) - 1
        i = min(max(i, 0), len(own) - 1)
        # left end
        k, cur, left = i, x, None
        while left is None:
            got = self.clouds[own[k]].nearest_left(cur, t, pts[k])
            if got is not None:
                left = got
            elif death[k] > t:
                left = (pts[k], death[k])
            else:
                cur = pts[k]
                k -= 1
        k, cur, right = i, x, None
        while right is None:
            got = self.clouds[own[k]].nearest_right(cur, t, pts[k + 1])
            if got is not None:
                right = got
            elif death[k + 1] > t:
                right = (pts[k + 1], death[k + 1])
            else:
                cur = pts[k + 1]
                k += 1
        return left, right

    def is_approximate(self, t: float) -> bool:
        if t < self.delta:
            return True
        k = int(np.searchsorted(self.match_times, t, side="right")) - 1
        return k >= 0 and t - self.match_times[k] < self.delta

    def query(self, x: float, t: float) -> tuple[tuple[float, float], bool]:
        """``D_t(x)`` and whether the answer sits inside a truncation window."""
        if not -self.A <= x <= self.A or not 0 <= t <= self.T:
            raise ValueError("query outside the simulated window")
        k = bisect_right(self.snap_times, t) - 1
        (l, _), (r, _) = self._cluster(self.snaps[k], x, t)
        return (l, r), self.is_approximate(t)

    def vacancy_points(self, t: float) -> list[tuple[float, float, int]]:
        """Alive vacancy marks at ``t`` inside the region, as (position, death, cloud id)."""
        k = bisect_right(self.snap_times, t) - 1
        cov = self.snaps[k]
        out = [(cov.pts[i], cov.death[i], -1) for i in range(len(cov.pts)) if cov.death[i] > t]
        for lo, hi, owner in cov.pieces(cov.pts[0], cov.pts[-1]):
            xs, d = self.clouds[owner].alive(lo, hi, t)
            out.extend(zip(xs.tolist(), d.tolist(), [owner] * xs.size))
        out.sort()
        return out

    def rows(self) -> list[tuple]:
        return [(f.time, "match_macro", f.position, f.left, f.right, "") for f in self.fires]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "kind", "position", "destroyed_left", "destroyed_right", "barrier_height"])
        for r in self.rows():
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
        return buf.getvalue()

    def vacancy_csv(self, t: float) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "position", "death_time", "cloud"])
        for x, d, c in self.vacancy_points(t):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(d)), c])
        return buf.getvalue()


def simulate_lff_beta(A: float, T: float, beta: float, delta: float | None = None,
                      rng: np.random.Generator | None = None) -> BetaTrajectory:
    return BetaTrajectory(A, T, beta, np.random.default_rng() if rng is None else rng, delta)
