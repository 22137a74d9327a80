"""Limit processes with barriers: the infinity and bounded-support regimes.

State on ``[-A, A]``:

* a reset time ``r(y)`` per position, so that the density is
  ``Z_t(y) = min(1, t - r(y))``.  It is stored as sorted breakpoints, with one
  value at each breakpoint and one on each open interval between them;
* barriers ``pos -> (start, height)``, with ``H_t(pos) = height - (t - start)``
  while positive.

A position blocks clusters when ``Z < 1`` or ``H > 0``.  A match at ``x`` with
``Z(x) = 1`` burns the blocked-free interval ``[a, b]`` around ``x``: the reset
time becomes the match time on ``(a, b)``, and at an endpoint only if the
density there was 1.  A match with ``Z(x) = u < 1`` leaves a barrier of height
``F(u, V)``.  ``F(u, v) = u`` gives the infinity regime; the bounded-support
regime uses the inverse CDF of the regeneration law.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..renewal import Dirac, Law, RegimeError
from .theta import dirac_theta_inverse, theta_inverse


@dataclass
class MatchMeasure:
    """Marks ``(time, position, uniform)`` of the match measure, time ordered."""

    times: np.ndarray
    xs: np.ndarray
    vs: np.ndarray

    def __len__(self) -> int:
        return int(self.times.size)


def sample_marks(A: float, T: float, rng: np.random.Generator) -> MatchMeasure:
    n = int(rng.poisson(2.0 * A * T))
    t = rng.uniform(0.0, T, n)
    x = rng.uniform(-A, A, n)
    v = rng.random(n)
    order = np.argsort(t, kind="stable")
    return MatchMeasure(t[order], x[order], v[order])


@dataclass
class BarrierEvent:
    time: float
    kind: str          # match_micro | match_macro
    position: float
    left: float | None
    right: float | None
    height: float | None


@dataclass
class BarrierState:
    A: float
    xs: list = field(default_factory=list)
    rp: list = field(default_factory=list)
    ri: list = field(default_factory=list)
    barriers: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, A: float) -> "BarrierState":
        return cls(A, [-A, A], [0.0, 0.0], [0.0], {})

    def copy(self) -> "BarrierState":
        return BarrierState(self.A, list(self.xs), list(self.rp), list(self.ri), dict(self.barriers))

    def reset_time(self, y: float) -> float:
        i = bisect_left(self.xs, y)
        if i < len(self.xs) and self.xs[i] == y:
            return self.rp[i]
        return self.ri[i - 1]

    def Z(self, y: float, t: float) -> float:
        return min(1.0, t - self.reset_time(y))

    def H(self, y: float, t: float) -> float:
        b = self.barriers.get(y)
        if b is None:
            return 0.0
        return max(0.0, b[1] - (t - b[0]))

    def cluster(self, x: float, t: float) -> tuple[float, float]:
        """``D_t(x)`` as ``(L, R)``; ``(x, x)`` when ``x`` itself blocks."""
        cut = t - 1.0
        xs, rp, ri = self.xs, self.rp, self.ri
        i = bisect_left(xs, x)
        on_point = i < len(xs) and xs[i] == x
        r0 = rp[i] if on_point else ri[i - 1]
        if r0 > cut or self.H(x, t) > 0:
            return x, x
        # nearest active barriers on either side
        bl, br = -math.inf, math.inf
        for p, (s, h) in self.barriers.items():
            if h - (t - s) > 0:
                if p < x and p > bl:
                    bl = p
                elif p > x and p < br:
                    br = p
        # density blockers: walk over points and intervals
        left = -self.A
        k = i - 1  # intervals (xs[k], xs[k+1]) and points xs[k], leftwards
        while k >= 0:
            if xs[k + 1] <= bl:
                break
            if ri[k] > cut:
                left = xs[k + 1]
                break
            if xs[k] <= bl:
                break
            if rp[k] > cut:
                left = xs[k]
                break
            k -= 1
        left = max(left, bl, -self.A)
        right = self.A
        k = i + 1 if on_point else i  # first breakpoint strictly right of x
        while k < len(xs):
            if xs[k - 1] >= br:
                break
            if ri[k - 1] > cut:
                right = xs[k - 1]
                break
            if xs[k] >= br:
                break
            if rp[k] > cut:
                right = xs[k]
                break
            k += 1
        right = min(right, br, self.A)
        return left, right

    def _ensure_point(self, y: float) -> int:
        i = bisect_left(self.xs, y)
        if i < len(self.xs) and self.xs[i] == y:
            return i
        v = self.ri[i - 1]
        self.xs.insert(i, y)
        self.rp.insert(i, v)
        self.ri.insert(i, v)
        return i

    def burn(self, a: float, b: float, tau: float) -> None:
        """Macroscopic fire over ``[a, b]`` at time ``tau``, with the endpoint rule."""
        za, zb = self.Z(a, tau), self.Z(b, tau)
        ia = self._ensure_point(a)
        ib = self._ensure_point(b)
        if ib > ia:
            del self.xs[ia + 1:ib]
            del self.rp[ia + 1:ib]
            del self.ri[ia + 1:ib]
            self.ri[ia] = tau
            ib = ia + 1
        if za >= 1.0:
            self.rp[ia] = tau
        if zb >= 1.0:
            self.rp[ib] = tau
        # barriers strictly inside are inert by construction
        for p in [p for p in self.barriers if a < p < b]:
            del self.barriers[p]

    def add_barrier(self, x: float, tau: float, height: float) -> None:
        if height > 0:
            self.barriers[x] = (tau, height)

    def prune(self, t: float) -> None:
        for p in [p for p, (s, h) in self.barriers.items() if h - (t - s) <= 0]:
            del self.barriers[p]


HeightFn = Callable[[float, float], float]


def identity_height(u: float, v: float) -> float:
    return u


def theta_height(law: Law) -> HeightFn:
    if isinstance(law, Dirac):
        return dirac_theta_inverse
    return lambda u, v: theta_inverse(law, u, v)


class BarrierTrajectory:
    """Event-indexed trajectory of the barrier process on ``[0, T] x [-A, A]``."""

    def __init__(self, A: float, T: float, marks: MatchMeasure, height: HeightFn,
                 variant: str, record: bool = True):
        self.A, self.T, self.variant = A, T, variant
        self.marks = marks
        self.events: list[BarrierEvent] = []
        self.times: list[float] = [0.0]
        self.snapshots: list[BarrierState] = []
        state = BarrierState.empty(A)
        if record:
            self.snapshots.append(state.copy())
        for tau, x, v in zip(marks.times.tolist(), marks.xs.tolist(), marks.vs.tolist()):
            state.prune(tau)
            z = state.Z(x, tau)
            if z >= 1.0:
                a, b = state.cluster(x, tau)
                state.burn(a, b, tau)
                self.events.append(BarrierEvent(tau, "match_macro", x, a, b, None))
            else:
                h = height(z, v)
                state.add_barrier(x, tau, h)
                self.events.append(BarrierEvent(tau, "match_micro", x, None, None, h))
            if record:
                self.times.append(tau)
                self.snapshots.append(state.copy())
        self.final = state
        self.recorded = record

    def state_at(self, t: float) -> BarrierState:
        if not self.recorded:
            last = self.events[-1].time if self.events else 0.0
            if t < last:
                raise ValueError("trajectory was built without history")
            return self.final
        k = bisect_right(self.times, t) - 1
        return self.snapshots[k]

    def query(self, x: float, t: float):
        """``(Z, D, H)`` at position ``x`` and time ``t``."""
        if not -self.A <= x <= self.A or not 0 <= t <= self.T:
            raise ValueError("query outside the simulated window")
        st = self.state_at(t)
        return st.Z(x, t), st.cluster(x, t), st.H(x, t)

    def rows(self) -> list[tuple]:
        out = []
        for e in self.events:
            out.append((e.time, e.kind, e.position,
                        "" if e.left is None else e.left,
                        "" if e.right is None else e.right,
                        "" if e.height is None else e.height))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "kind", "position", "destroyed_left", "destroyed_right", "barrier_height"])
        for r in self.rows():
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
        return buf.getvalue()

    def signature(self) -> tuple:
        """Hashable summary used for exact trajectory comparison."""
        return tuple((e.time, e.kind, e.position, e.left, e.right, e.height) for e in self.events)


def simulate_lff_inf(A: float, T: float, rng: np.random.Generator, record: bool = True,
                     marks: MatchMeasure | None = None) -> BarrierTrajectory:
    marks = sample_marks(A, T, rng) if marks is None else marks
    return BarrierTrajectory(A, T, marks, identity_height, "inf", record)


def simulate_lff_bs(A: float, T: float, law: Law, rng: np.random.Generator, record: bool = True,
                    marks: MatchMeasure | None = None,
                    height: HeightFn | None = None) -> BarrierTrajectory:
    """Bounded-support limit process.

    ``height`` overrides the barrier height map ``(u, v) -> h``; passing
    ``identity_height`` reproduces the infinity-regime trajectory drawn from
    the same marks.
    """
    if law.regime.kind != "BS":
        raise RegimeError("simulate_lff_bs needs a bounded support law")
    marks = sample_marks(A, T, rng) if marks is None else marks
    return BarrierTrajectory(A, T, marks, theta_height(law) if height is None else height, "bs", record)


def barrier_from_rows(A: float, T: float, rows: list[dict], variant: str = "bs") -> BarrierTrajectory:
    """Rebuild a trajectory from exported event rows, taking the recorded barrier heights."""
    times = np.array([float(r["time"]) for r in rows])
    xs = np.array([float(r["position"]) for r in rows])
    heights = [float(r["barrier_height"]) if r["barrier_height"] not in ("", None) else 0.0 for r in rows]
    marks = MatchMeasure(times, xs, np.arange(len(rows), dtype=float))
    return BarrierTrajectory(A, T, marks, lambda u, v: heights[int(v)], variant)
