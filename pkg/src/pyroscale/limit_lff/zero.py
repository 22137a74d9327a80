"""Limit process in the logarithmic regime.

Vacant marks form a Poisson process of rate 1 that never changes: every burnt
cell is reseeded instantly, so the cluster of ``x`` is always the cell between
the two marks around it.  Matches are kept only for export.  They cover the
whole span of the marks, since cells meeting the box stick out of it.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right

import numpy as np


class ZeroTrajectory:
    def __init__(self, A: float, T: float, rng: np.random.Generator):
        self.A, self.T = A, T
        marks = []
        # unit blocks outwards until a mark lies beyond each side
        lo = math.floor(-A) - 1
        hi = math.ceil(A) + 1
        for b in range(lo, hi):
            marks.extend((b + rng.random(rng.poisson(1.0))).tolist())
        marks.sort()
        while not marks or marks[0] > -A:
            lo -= 1
            marks = sorted((lo + rng.random(rng.poisson(1.0))).tolist()) + marks
        while marks[-1] < A:
            marks.extend(sorted((hi + rng.random(rng.poisson(1.0))).tolist()))
            hi += 1
        self.marks = marks
        region = marks[-1] - marks[0]
        n = int(rng.poisson(region * T))
        self.match_times = np.sort(rng.uniform(0.0, T, n))
        self.match_pos = rng.uniform(marks[0], marks[-1], n)

    def cell(self, x: float) -> tuple[float, float]:
        k = bisect_right(self.marks, x)
        return self.marks[k - 1], self.marks[k]

    def query(self, x: float, t: float) -> tuple[float, float]:
        if not -self.A <= x <= self.A or not 0 <= t <= self.T:
            raise ValueError("query outside the simulated window")
        return self.cell(x)

    def rows(self) -> list[tuple]:
        out = []
        for t, x in zip(self.match_times.tolist(), self.match_pos.tolist()):
            l, r = self.cell(x)
            out.append((t, "match_macro", x, l, r, ""))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "kind", "position", "destroyed_left", "destroyed_right", "barrier_height"])
        for r in self.rows():
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
        return buf.getvalue()


def simulate_lff_0(A: float, rng: np.random.Generator, T: float = 1.0) -> ZeroTrajectory:
    return ZeroTrajectory(A, T, rng)

