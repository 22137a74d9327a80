"""Space-time SVG diagrams from exported traces.

Space runs horizontally, time upwards.  The picture is sampled on ``rows``
time rows.  For discrete traces, occupied sites are black.  When there are
more sites than ``max_width`` pixels, sites are grouped per pixel and
a pixel is black when most of its sites are occupied.  This downsampling
is lossy and meant for viewing only.  Barrier traces are shaded by the
density (black at density 1); barriers are red vertical segments and
matches are bullets.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .limit_lff import barrier_from_rows

_HEAD = ('<?xml version="1.0" encoding="UTF-8"?>\n'
         '<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
         'viewBox="0 0 {w} {h}">\n<rect width="{w}" height="{h}" fill="white"/>\n')


def _f(v: float) -> str:
    return f"{v:.2f}"


def read_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def _runs(mask: np.ndarray):
    """Start and stop indices of the True runs of a boolean vector."""
    m = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(m)
    return np.flatnonzero(d == 1), np.flatnonzero(d == -1)


def render_discrete(text: str, T: float | None = None, half: int | None = None,
                    max_width: int = 4000, rows: int = 200, height: int = 600) -> str:
    """SVG of a discrete trace (columns ``event_time, kind, site, fire_left, fire_right``)."""
    recs = read_rows(text)
    events = []
    lo_site, hi_site = 0, 0
    for r in recs:
        t = float(r["event_time"])
        s = int(r["site"])
        lo_site, hi_site = min(lo_site, s), max(hi_site, s)
        if r["kind"] == "fire":
            events.append((t, 1, int(r["fire_left"]), int(r["fire_right"])))
        elif r["kind"] == "seed":
            events.append((t, 0, s, s))
    if half is None:
        half = max(-lo_site, hi_site)
    if T is None:
        T = max((e[0] for e in events), default=1.0)
    T = T if T > 0 else 1.0
    n = 2 * half + 1
    group = max(1, math.ceil(n / max_width))
    width = math.ceil(n / group)
    out = [_HEAD.format(w=width, h=height)]
    occ = np.zeros(n, dtype=bool)
    rh = height / rows
    k = 0
    for row in range(rows):
        t = (row + 0.5) * T / rows
        while k < len(events) and events[k][0] <= t:
            _, kind, a, b = events[k]
            occ[a + half:b + half + 1] = kind == 0
            k += 1
        pad = np.zeros(width * group, dtype=bool)
        pad[:n] = occ
        px = pad.reshape(width, group).sum(axis=1) * 2 > np.minimum(group, n - np.arange(width) * group)
        y = height - (row + 1) * rh
        for s, e in zip(*_runs(px)):
            out.append(f'<rect x="{s}" y="{_f(y)}" width="{e - s}" height="{_f(rh)}" fill="black"/>\n')
    for r in recs:
        if r["kind"] == "fire":
            t = float(r["event_time"])
            if t <= T:
                cx = (int(r["site"]) + half + 0.5) / group
                out.append(f'<circle cx="{_f(cx)}" cy="{_f(height * (1 - t / T))}" r="3" fill="red" '
                           'stroke="white" stroke-width="0.5"/>\n')
    out.append("</svg>\n")
    return "".join(out)


def render_barrier(text: str, A: float, T: float, width: int = 800, rows: int = 200,
                   height: int = 600) -> str:
    """SVG of a barrier-process trace, replayed from its event rows."""
    traj = barrier_from_rows(A, T, read_rows(text))
    sx = width / (2 * A)
    X = lambda x: (x + A) * sx
    Y = lambda t: height * (1 - t / T)
    out = [_HEAD.format(w=width, h=height)]
    rh = height / rows
    for row in range(rows):
        t = (row + 0.5) * T / rows
        st = traj.state_at(t)
        shades = [round(min(1.0, max(0.0, t - ri)), 2) for ri in st.ri]
        y = height - (row + 1) * rh
        k = 0
        while k < len(shades):
            j = k
            while j + 1 < len(shades) and shades[j + 1] == shades[k]:
                j += 1
            if shades[k] > 0:
                x0, x1 = X(st.xs[k]), X(st.xs[j + 1])
                out.append(f'<rect x="{_f(x0)}" y="{_f(y)}" width="{_f(x1 - x0)}" height="{_f(rh)}" '
                           f'fill="black" fill-opacity="{shades[k]:.2f}"/>\n')
            k = j + 1
    for e in traj.events:
        if e.kind == "match_micro" and e.height:
            top = min(T, e.time + e.height)
            out.append(f'<line x1="{_f(X(e.position))}" y1="{_f(Y(e.time))}" x2="{_f(X(e.position))}" '
                       f'y2="{_f(Y(top))}" stroke="red" stroke-width="1.5"/>\n')
    for e in traj.events:
        out.append(f'<circle cx="{_f(X(e.position))}" cy="{_f(Y(e.time))}" r="3" fill="red" '
                   'stroke="white" stroke-width="0.5"/>\n')
    out.append("</svg>\n")
    return "".join(out)
