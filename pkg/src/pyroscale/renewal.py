"""Laws on (0, inf) and stationary renewal processes.

A law ``mu`` with finite mean ``m`` defines

* the delay law ``nu``, with density ``mu((t, inf)) / m``, which is the law of
  the wait until the next event seen from a fixed time;
* the size-biased law ``zeta``, with density ``t mu(dt) / m``, which is the law
  of the gap straddling a fixed time.

A stationary renewal stream starts with a ``nu`` distributed delay and then
uses i.i.d. ``mu`` gaps.  Every function here is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

E = math.e


class RegimeError(ValueError):
    """Raised when an operation is undefined for the tail regime of a law."""


@dataclass(frozen=True)
class Regime:
    """Tail regime of the delay law.

    ``kind`` is one of ``"BS"`` (bounded support), ``"beta"`` (polynomial tail,
    exponent in ``beta``), ``"infinity"`` and ``"zero"``.
    """

    kind: str
    beta: float | None = None

    def __str__(self) -> str:
        if self.kind == "beta":
            return f"Beta({self.beta:g})"
        return {"BS": "BS", "infinity": "Infinity", "zero": "Zero"}[self.kind]


def _uniform(rng: np.random.Generator, size) -> np.ndarray:
    # values in (0, 1], so that inverse survival functions stay finite at 1
    return 1.0 - rng.random(size)


def _scalar(x, size):
    return float(x) if size is None else x


def bisect_increasing(f: Callable[[float], float], lo: float, hi: float,
                      max_iter: int = 200) -> float:
    """Root of an increasing function with ``f(lo) < 0``.

    ``hi`` is doubled until ``f(hi) >= 0``; then plain bisection runs until the
    bracket cannot shrink any further in floating point.
    """
    for _ in range(max_iter):
        if f(hi) >= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ArithmeticError("no sign change found while expanding the bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi if abs(f(hi)) <= abs(f(lo)) else lo
        if f(mid) >= 0:
            hi = mid
        else:
            lo = mid
    raise ArithmeticError("bisection did not converge within the iteration cap")


class Law:
    """Base class of the supported seed and match laws."""

    name: str = ""

    # closed forms provided by subclasses
    @property
    def mean(self) -> float:
        raise NotImplementedError

    def tail_mu(self, t):
        raise NotImplementedError

    def tail_nu(self, t):
        raise NotImplementedError

    def log_tail_nu(self, t):
        with np.errstate(divide="ignore"):
            return np.log(self.tail_nu(t))

    def nu_isf(self, u):
        """Point ``x`` with ``tail_nu(x) = u``."""
        raise NotImplementedError

    def mu_isf(self, u):
        """Point ``x`` with ``tail_mu(x) = u``."""
        raise NotImplementedError

    @property
    def regime(self) -> Regime:
        raise NotImplementedError

    # samplers
    def sample_nu(self, rng: np.random.Generator, size=None):
        with np.errstate(over="ignore"):
            return _scalar(self.nu_isf(_uniform(rng, size)), size)

    def sample_mu(self, rng: np.random.Generator, size=None):
        with np.errstate(over="ignore"):
            return _scalar(self.mu_isf(_uniform(rng, size)), size)

    def sample_zeta(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def advance(self, cur: np.ndarray, tau: float, rng: np.random.Generator) -> np.ndarray:
        """First event strictly after ``tau`` of streams whose last event is ``cur <= tau``."""
        out = np.array(cur, dtype=float, copy=True)
        todo = np.flatnonzero(out <= tau)
        while todo.size:
            with np.errstate(over="ignore"):
                out[todo] += self.sample_mu(rng, todo.size)
            todo = todo[out[todo] <= tau]
        return out

    # inverses used to build the scales
    def nu_cdf(self, t):
        """``nu((0, t))``."""
        return 1.0 - self.tail_nu(t)

    def psi(self, z: float) -> float:
        raise RegimeError(f"psi is only defined for BS and infinity regimes, not {self.regime}")

    def phi(self, z: float) -> float:
        """Inverse of ``t -> t / tail_nu(t)``."""
        if z <= 0:
            raise ValueError("phi requires z > 0")
        return bisect_increasing(lambda t: t - z * float(self.tail_nu(t)), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"law": self.name}


@dataclass(frozen=True)
class Dirac(Law):
    """Point mass at ``T``."""

    T: float = 1.0
    name = "dirac"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("Dirac requires T > 0")
        object.__setattr__(self, "T", float(self.T))

    @property
    def mean(self) -> float:
        return self.T

    def tail_mu(self, t):
        return np.where(np.asarray(t) < self.T, 1.0, 0.0)[()]

    def tail_nu(self, t):
        return np.maximum(0.0, 1.0 - np.asarray(t, dtype=float) / self.T)[()]

    def nu_isf(self, u):
        return self.T * (1.0 - np.asarray(u, dtype=float))

    def mu_isf(self, u):
        return np.full(np.shape(u), self.T)[()]

    def sample_nu(self, rng, size=None):
        return _scalar(self.T * rng.random(size), size)

    def sample_zeta(self, rng, size=None):
        return self.T if size is None else np.full(size, self.T)

    def advance(self, cur, tau, rng):
        cur = np.asarray(cur, dtype=float)
        k = np.floor((tau - cur) / self.T) + 1.0
        out = np.where(cur <= tau, cur + k * self.T, cur)
        while True:
            low = out <= tau
            if not low.any():
                return out
            out[low] += self.T

    @property
    def regime(self) -> Regime:
        return Regime("BS")

    def psi(self, z):
        if not 0 <= z:
            raise ValueError("psi requires z >= 0")
        return self.T * min(float(z), 1.0)

    def phi(self, z):
        raise RegimeError("phi is undefined for a bounded support law")

    def to_dict(self):
        return {"law": "dirac", "T": self.T}


@dataclass(frozen=True)
class Exponential(Law):
    """Unit rate exponential law; here ``nu`` equals ``mu``."""

    name = "exponential"

    @property
    def mean(self):
        return 1.0

    def tail_mu(self, t):
        return np.exp(-np.asarray(t, dtype=float))[()]

    tail_nu = tail_mu

    def log_tail_nu(self, t):
        return -np.asarray(t, dtype=float)

    def nu_isf(self, u):
        return -np.log(u)

    mu_isf = nu_isf

    def sample_zeta(self, rng, size=None):
        return _scalar(rng.standard_gamma(2.0, size), size)

    def advance(self, cur, tau, rng):
        # memoryless: the overshoot past tau is again exponential
        cur = np.asarray(cur, dtype=float)
        low = cur <= tau
        out = cur.copy()
        out[low] = tau + rng.standard_exponential(int(low.sum()))
        return out

    @property
    def regime(self):
        return Regime("infinity")

    def psi(self, z):
        if z >= 1:
            return math.inf
        return -math.log1p(-z)


@dataclass(frozen=True)
class WeibullTail(Law):
    """Law with ``mu((t, inf)) = exp(-t**alpha)``.

    The delay law has tail ``Q(1/alpha, t**alpha)`` (regularised upper
    incomplete gamma function), so every quantity has an exact special
    function form.
    """

    alpha: float = 2.0
    name = "weibull"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("WeibullTail requires alpha > 0")
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def mean(self):
        return math.gamma(1.0 + 1.0 / self.alpha)

    def tail_mu(self, t):
        with np.errstate(over="ignore"):
            return np.exp(-np.asarray(t, dtype=float) ** self.alpha)[()]

    def tail_nu(self, t):
        return special.gammaincc(1.0 / self.alpha, np.asarray(t, dtype=float) ** self.alpha)[()]

    def log_tail_nu(self, t):
        a = 1.0 / self.alpha
        z = np.atleast_1d(np.asarray(t, dtype=float) ** self.alpha)
        q = special.gammaincc(a, z)
        out = np.empty_like(z)
        ok = q > 1e-280
        out[ok] = np.log(q[ok])
        zz = z[~ok]
        # asymptotic expansion of the upper incomplete gamma function
        out[~ok] = ((a - 1.0) * np.log(zz) - zz - special.gammaln(a)
                    + np.log1p((a - 1.0) / zz + (a - 1.0) * (a - 2.0) / zz**2))
        return out.reshape(np.shape(t))[()]

    def nu_isf(self, u):
        return special.gammainccinv(1.0 / self.alpha, u) ** (1.0 / self.alpha)

    def mu_isf(self, u):
        return (-np.log(u)) ** (1.0 / self.alpha)

    def sample_nu(self, rng, size=None):
        return _scalar(rng.standard_gamma(1.0 / self.alpha, size) ** (1.0 / self.alpha), size)

    def sample_zeta(self, rng, size=None):
        return _scalar(rng.standard_gamma(1.0 + 1.0 / self.alpha, size) ** (1.0 / self.alpha), size)

    @property
    def regime(self):
        return Regime("infinity")

    def psi(self, z):
        if z >= 1:
            return math.inf
        if z <= 0:
            return 0.0
        return float(special.gammaincinv(1.0 / self.alpha, z)) ** (1.0 / self.alpha)

    def to_dict(self):
        return {"law": "weibull", "alpha": self.alpha}


@dataclass(frozen=True)
class ParetoTail(Law):
    """Law with ``mu((t, inf)) = (1 + t/beta)**(-beta - 1)`` and mean 1."""

    beta: float = 2.0
    name = "pareto"

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("ParetoTail requires beta > 0")
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def mean(self):
        return 1.0

    def tail_mu(self, t):
        return (1.0 + np.asarray(t, dtype=float) / self.beta) ** (-self.beta - 1.0)

    def tail_nu(self, t):
        return (1.0 + np.asarray(t, dtype=float) / self.beta) ** (-self.beta)

    def log_tail_nu(self, t):
        return -self.beta * np.log1p(np.asarray(t, dtype=float) / self.beta)

    def nu_isf(self, u):
        return self.beta * (np.asarray(u, dtype=float) ** (-1.0 / self.beta) - 1.0)

    def mu_isf(self, u):
        return self.beta * (np.asarray(u, dtype=float) ** (-1.0 / (self.beta + 1.0)) - 1.0)

    def sample_zeta(self, rng, size=None):
        # t mu(dt) is a beta-prime law: beta * G(2) / G(beta)
        g2 = rng.standard_gamma(2.0, size)
        gb = rng.standard_gamma(self.beta, size)
        return _scalar(self.beta * g2 / gb, size)

    @property
    def regime(self):
        return Regime("beta", self.beta)

    def to_dict(self):
        return {"law": "pareto", "beta": self.beta}


@dataclass(frozen=True)
class LogTail(Law):
    """Law with ``mu((t, inf)) = e / ((e + t) log(e + t)**2)``, mean ``e``.

    Its delay law has tail ``1 / log(e + t)``.
    """

    name = "logtail"

    @property
    def mean(self):
        return E

    def tail_mu(self, t):
        s = E + np.asarray(t, dtype=float)
        return E / s / np.log(s) ** 2

    def tail_nu(self, t):
        return 1.0 / np.log(E + np.asarray(t, dtype=float))

    def log_tail_nu(self, t):
        return -np.log(np.log(E + np.asarray(t, dtype=float)))

    def nu_isf(self, u):
        return np.exp(1.0 / np.asarray(u, dtype=float)) - E

    def mu_isf(self, u):
        # with y = log(e + t): y**2 exp(y - 1) = 1/u, solved by Lambert W
        w = special.lambertw(0.5 * np.sqrt(E / np.asarray(u, dtype=float))).real
        return np.exp(2.0 * w) - E

    def sample_zeta(self, rng, size=None):
        # invert the survival of zeta in the variable L = log(e + t):
        #   zeta((t, inf)) = 1/L + (1 - exp(1 - L)) / L**2
        v = np.atleast_1d(_uniform(rng, size))
        lo = np.ones_like(v)
        hi = 2.0 / v + 2.0
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            surv = 1.0 / mid + (1.0 - np.exp(1.0 - mid)) / mid**2
            above = surv > v
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        with np.errstate(over="ignore"):
            out = np.exp(0.5 * (lo + hi)) - E
        return float(out[0]) if size is None else out.reshape(size)

    @property
    def regime(self):
        return Regime("zero")


LawSpec = Law

_BUILDERS = {
    "dirac": (Dirac, {"T"}),
    "exponential": (Exponential, set()),
    "weibull": (WeibullTail, {"alpha"}),
    "pareto": (ParetoTail, {"beta"}),
    "logtail": (LogTail, set()),
}


def law_from_dict(d: dict) -> Law:
    """Build a law from its config form, e.g. ``{"law": "pareto", "beta": 2.0}``."""
    if "law" not in d:
        raise ValueError("law specification needs a 'law' field")
    kind = str(d["law"]).lower()
    if kind not in _BUILDERS:
        raise ValueError(f"unknown law {kind!r}; choose from {sorted(_BUILDERS)}")
    cls, allowed = _BUILDERS[kind]
    extra = set(d) - allowed - {"law"}
    if extra:
        raise ValueError(f"unexpected fields for law {kind!r}: {sorted(extra)}")
    return cls(**{k: float(d[k]) for k in allowed if k in d})


# functional interface


def tail_mu(law: Law, t):
    return law.tail_mu(t)


def tail_nu(law: Law, t):
    return law.tail_nu(t)


def sample_nu(law: Law, rng: np.random.Generator, size=None):
    return law.sample_nu(rng, size)


def sample_mu(law: Law, rng: np.random.Generator, size=None):
    return law.sample_mu(rng, size)


def sample_zeta(law: Law, rng: np.random.Generator, size=None):
    return law.sample_zeta(rng, size)


def psi_S(law: Law, z: float) -> float:
    """Inverse of ``t -> nu((0, t))``; ``+inf`` for ``z >= 1`` under the infinity regime."""
    return law.psi(z)


def phi_S(law: Law, z: float) -> float:
    """Inverse of ``t -> t / nu((t, inf))``."""
    return law.phi(z)


def _extend(law: Law, rng, start: float, horizon: float, sign: float) -> list[float]:
    out = []
    cur = start
    block = 16
    while abs(cur) <= horizon:
        with np.errstate(over="ignore"):
            steps = cur + sign * np.cumsum(law.sample_mu(rng, block))
        keep = steps[np.abs(steps) <= horizon]
        out.extend(keep.tolist())
        if keep.size < block:
            break
        cur = float(steps[-1])
        block = min(2 * block, 1 << 16)
    return out


def stream_events(law: Law, rng: np.random.Generator, horizon: float) -> np.ndarray:
    """Event times in ``(0, horizon]`` of a stationary renewal stream."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    first = law.sample_nu(rng)
    if first > horizon:
        return np.empty(0)
    return np.array([first] + _extend(law, rng, first, horizon, 1.0))


def stream_two_sided(law: Law, rng: np.random.Generator, horizon: float):
    """Two-sided stationary stream on ``[-horizon, horizon]``.

    The straddling gap ``X0`` is size biased and split uniformly:
    ``T0 = -(1 - U) X0`` and ``T1 = U X0``.  Both are always returned, even
    if they fall outside the horizon.

    Returns
    -------
    neg : ndarray
        Increasing times ``... < T_{-1} < T_0 < 0``.
    pos : ndarray
        Increasing times ``0 <= T_1 < T_2 < ...``.
    """
    x0 = law.sample_zeta(rng)
    u = rng.random()
    t0, t1 = -(1.0 - u) * x0, u * x0
    neg = [t0] + _extend(law, rng, t0, horizon, -1.0)
    pos = [t1] + _extend(law, rng, t1, horizon, 1.0)
    return np.array(neg[::-1]), np.array(pos)


def residual_life(law: Law, rng: np.random.Generator, t: float, size: int) -> np.ndarray:
    """Time from ``t`` to the next event of ``size`` independent stationary streams."""
    first = np.asarray(law.sample_nu(rng, size), dtype=float)
    return law.advance(first, t, rng) - t if t >= 0 else first - t


class RenewalStream:
    """Lazy generator of the event times of one stationary stream."""

    def __init__(self, law: Law, rng: np.random.Generator):
        self.law = law
        self.rng = rng
        self.last = -math.inf
        self.initialized = False
        self._peeked: float | None = None

    def _draw(self) -> float:
        if not self.initialized:
            self.initialized = True
            return float(self.law.sample_nu(self.rng))
        return self.last + float(self.law.sample_mu(self.rng))

    def peek(self) -> float:
        if self._peeked is None:
            self._peeked = self._draw()
        return self._peeked

    def next(self) -> float:
        t = self.peek()
        self._peeked = None
        self.last = t
        return t

    def __iter__(self):
        while True:
            yield self.next()

    def events_until(self, horizon: float) -> list[float]:
        """Emit every further event up to ``horizon``."""
        out = []
        while self.peek() <= horizon:
            out.append(self.next())
        return out
