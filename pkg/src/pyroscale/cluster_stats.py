"""Cluster-size laws, Monte Carlo estimators and their verdicts.

Every estimator returns a :class:`StatsReport`.  Bins keep the raw counts
(hits, or sums and sums of squares) they were built from, so a verdict can
always be recomputed.  Exact identities are judged with a 3 sigma band.  Limit
statements without a known rate use fixed tolerances, tagged
``policy tolerance`` in the report.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate, stats

from .discrete_ff import FFSimulator, PercolationSim
from .limit_lff import sample_theta, sample_theta_lambda, simulate_lff_0, simulate_lff_bs
from .limit_lff.beta import fresh_cloud_count
from .renewal import Dirac, Law, RegimeError, residual_life
from .rng import substream
from .scaling import compute_a_lambda, compute_scales

POLICY = "policy tolerance"


# closed forms


def _require_bs(law: Law) -> None:
    if law.regime.kind != "BS":
        raise RegimeError(f"cluster-size law needs a bounded support law, not {law.regime}")


def qk_of_z(law: Law, k: int, z: float) -> float:
    """Probability that the cluster of 0 has ``k`` sites at density ``z``."""
    _require_bs(law)
    if k < 0:
        raise ValueError("k must be non-negative")
    if z >= 1.0:
        return 0.0
    hole = float(law.tail_nu(law.T * z))
    if k == 0:
        return hole
    return k * hole * hole * (1.0 - hole) ** k


def qk_bar(law: Law, k: int) -> tuple[float, float]:
    """Average of ``qk_of_z`` over ``z`` uniform on ``[0, 1]``, with the quadrature error bound."""
    _require_bs(law)
    val, err = integrate.quad(lambda z: qk_of_z(law, k, z), 0.0, 1.0,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return val, err


def dirac_qk_bar(k: int) -> float:
    return 0.5 if k == 0 else 2.0 * k / ((k + 1) * (k + 2) * (k + 3))


def kingman_rho(m: int, t: float) -> float:
    p = t / (2.0 + t)
    return m * (2.0 / (2.0 + t)) ** 2 * p ** (m - 1)


# report plumbing


@dataclass
class Bin:
    label: str
    target: float
    empirical: float
    stderr: float
    n: int
    policy: str = "3sigma"
    count: float | None = None
    sumsq: float | None = None
    note: str = ""

    @classmethod
    def proportion(cls, label, target, hits, n, policy="3sigma", note=""):
        p = hits / n
        return cls(label, target, p, math.sqrt(p * (1.0 - p) / n), n, policy, float(hits), None, note)

    @classmethod
    def mean(cls, label, target, total, sumsq, n, policy="3sigma", note=""):
        m = total / n
        var = max(sumsq / n - m * m, 0.0) * n / max(n - 1, 1)
        return cls(label, target, m, math.sqrt(var / n), n, policy, float(total), float(sumsq), note)

    @classmethod
    def value(cls, label, target, value, err=0.0, policy="abs:1e-9", note=""):
        return cls(label, target, value, err, 0, policy, None, None, note)

    @property
    def verdict(self) -> bool:
        if self.policy == "info" or (isinstance(self.target, float) and math.isnan(self.target)):
            return True
        diff = abs(self.empirical - self.target)
        if self.policy == "3sigma":
            return diff <= 3.0 * self.stderr if self.stderr > 0 else diff <= 1e-12
        if self.policy.startswith("abs:"):
            return diff < float(self.policy[4:])
        raise ValueError(f"unknown policy {self.policy!r}")

    def rederive(self) -> "Bin":
        """Rebuild the bin from its stored counts."""
        if self.count is None:
            return self
        if self.sumsq is None:
            return Bin.proportion(self.label, self.target, self.count, self.n, self.policy, self.note)
        return Bin.mean(self.label, self.target, self.count, self.sumsq, self.n, self.policy, self.note)


@dataclass
class Check:
    """Aggregate test: ``statistic`` compared with ``threshold`` (``kind`` is ``gt``, ``lt`` or ``le``)."""

    name: str
    statistic: float
    threshold: float
    kind: str
    n: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        if self.kind == "gt":
            return self.statistic > self.threshold
        if self.kind == "lt":
            return self.statistic < self.threshold
        if self.kind == "le":
            return self.statistic <= self.threshold
        if self.kind == "info":
            return True
        raise ValueError(self.kind)


@dataclass
class StatsReport:
    estimator: str
    params: dict
    bins: list[Bin] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(b.verdict for b in self.bins) and all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        out = [f"{self.estimator}:{b.label}" for b in self.bins if not b.verdict]
        out += [f"{self.estimator}:{c.name}" for c in self.checks if not c.passed]
        return out

    def param_str(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.params.items())

    def rows(self) -> list[list]:
        p = self.param_str()
        out = []
        for b in self.bins:
            out.append([self.estimator, p, b.label, b.target, b.empirical, b.stderr, b.n,
                        "pass" if b.verdict else "fail"])
        for c in self.checks:
            out.append([self.estimator, p, c.name, c.threshold, c.statistic, "", c.n,
                        "pass" if c.passed else "fail"])
        return out

    def bin(self, label: str) -> Bin:
        return next(b for b in self.bins if b.label == label)

    def check(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def merge(self, other: "StatsReport") -> "StatsReport":
        """Pool the counts of two reports of the same estimator, bin by bin."""
        if other.estimator != self.estimator:
            raise ValueError("can only merge reports of the same estimator")
        mine = {b.label: b for b in self.bins}
        merged = []
        for b in other.bins:
            a = mine.get(b.label)
            if a is None or a.count is None or b.count is None:
                raise ValueError(f"bin {b.label} has no counts to merge")
            if a.sumsq is None:
                merged.append(Bin.proportion(a.label, a.target, a.count + b.count, a.n + b.n, a.policy, a.note))
            else:
                merged.append(Bin.mean(a.label, a.target, a.count + b.count, a.sumsq + b.sumsq,
                                       a.n + b.n, a.policy, a.note))
        return StatsReport(self.estimator, dict(self.params), merged, [], list(self.notes))


CSV_HEADER = ["estimator", "param", "bin", "target", "empirical", "stderr", "N", "verdict"]


def reports_csv(reports: list[StatsReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        for row in r.rows():
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def chi_square_fit(observed: np.ndarray, probs: np.ndarray, min_expected: float = 5.0):
    """Chi-square goodness of fit, pooling sparse cells into their neighbours.

    ``probs`` must sum to 1 over the categories of ``observed``.  Returns the
    statistic, the p-value and the number of cells used.
    """
    obs = np.asarray(observed, dtype=float)
    n = obs.sum()
    exp = np.asarray(probs, dtype=float) * n
    o_cells, e_cells = [], []
    co = ce = 0.0
    for o, e in zip(obs, exp):
        co += o
        ce += e
        if ce >= min_expected:
            o_cells.append(co)
            e_cells.append(ce)
            co = ce = 0.0
    if ce > 0 and e_cells:
        o_cells[-1] += co
        e_cells[-1] += ce
    res = stats.chisquare(o_cells, e_cells)
    return float(res.statistic), float(res.pvalue), len(o_cells)


def _poisson_probs(mean: float, kmax: int) -> np.ndarray:
    p = stats.poisson.pmf(np.arange(kmax + 1), mean)
    p[-1] += stats.poisson.sf(kmax, mean)
    return p


def _parallel(fn, chunks, jobs: int):
    if jobs == 1:
        return [fn(*c) for c in chunks]
    return Parallel(n_jobs=jobs)(delayed(fn)(*c) for c in chunks)


def _chunks(n: int, size: int):
    out, s = [], 0
    while s < n:
        out.append((s, min(n, s + size)))
        s += size
    return out


# ensembles


def _discrete_sizes(seed, lo, hi, law, lam, A, t, fires, x, match_law):
    scales = compute_scales(law, lam)
    out = np.empty(hi - lo, dtype=np.int64)
    site = int(math.floor(scales.n_lambda * x))
    for r in range(lo, hi):
        sim = FFSimulator(A, lam, law, match_law, substream(seed, r), fires=fires, scales=scales)
        sim.run_until(scales.a_lambda * t)
        out[r - lo] = sim.cluster_size(site)
    return out


def discrete_cluster_sizes(law: Law, lam: float, A: float, t: float, replicas: int, seed: int,
                           jobs: int = 1, fires: bool = True, x: float = 0.0,
                           match_law: Law | None = None) -> np.ndarray:
    """Cluster size of the site at ``x`` at rescaled time ``t`` over independent replicas."""
    chunks = [(seed, lo, hi, law, lam, A, t, fires, x, match_law) for lo, hi in _chunks(replicas, 500)]
    return np.concatenate(_parallel(_discrete_sizes, chunks, jobs))


def _lff_z(seed, lo, hi, law, A, t, x):
    out = np.empty(hi - lo)
    for r in range(lo, hi):
        traj = simulate_lff_bs(A, t, law, substream(seed, r), record=False)
        out[r - lo] = traj.final.Z(x, t)
    return out


def lff_bs_z_samples(law: Law, A: float, t: float, n: int, seed: int, jobs: int = 1,
                     x: float = 0.0) -> np.ndarray:
    """``Z_t(x)`` from independent bounded-support limit trajectories.

    Each trajectory is simulated on ``[0, t]`` and read just before ``t``.
    Marks fall at ``t`` with probability 0, so this is the left limit.
    """
    chunks = [(seed, lo, hi, law, A, t, x) for lo, hi in _chunks(n, 5000)]
    return np.concatenate(_parallel(_lff_z, chunks, jobs))


# estimators


def cluster_size_histogram(sizes: np.ndarray, law: Law, k_max: int = 10,
                           z_samples: np.ndarray | None = None, t: float | None = None,
                           tv_tol: float = 0.05, params: dict | None = None) -> StatsReport:
    """Empirical law of the cluster of 0 against the limit target.

    The target is the mean of ``q_k(Z)`` over the ``z_samples`` when given,
    else ``q_k(min(t, 1))`` (pure growth, no fires).
    """
    _require_bs(law)
    sizes = np.asarray(sizes)
    n = sizes.size
    if z_samples is None:
        if t is None:
            raise ValueError("need z_samples or t")
        target = np.array([qk_of_z(law, k, min(t, 1.0)) for k in range(k_max + 1)])
        tse = np.zeros(k_max + 1)
        policy = "3sigma"
    else:
        z = np.asarray(z_samples, dtype=float)
        hole = np.where(z >= 1.0, 0.0, law.tail_nu(law.T * np.minimum(z, 1.0)))
        vals = np.empty((k_max + 1, z.size))
        vals[0] = hole
        for k in range(1, k_max + 1):
            vals[k] = k * hole**2 * (1.0 - hole) ** k
        target = vals.mean(axis=1)
        tse = vals.std(axis=1, ddof=1) / math.sqrt(z.size)
        policy = "info"
    rep = StatsReport("cluster-size", params or {"k_max": k_max, "N": n})
    emp = np.array([(sizes == k).sum() for k in range(k_max + 1)])
    for k in range(k_max + 1):
        b = Bin.proportion(f"k={k}", float(target[k]), int(emp[k]), n, policy)
        rep.bins.append(b)
    if z_samples is not None:
        tv = 0.5 * float(np.abs(emp / n - target).sum())
        rep.checks.append(Check(f"tv_k<={k_max}", tv, tv_tol, "lt", n, POLICY))
        rep.notes.append(f"target standard errors: max {tse.max():.2e}")
    return rep


def macro_tail(lengths: np.ndarray, B_grid, exact_zero: bool = False, tol: float = 0.005,
               ratio_bounds=(0.05, 0.95)) -> StatsReport:
    """Survival ``P(|D| >= B)`` of the macroscopic cluster length.

    With ``exact_zero`` the target is ``(B + 1) exp(-B)``.  Otherwise only
    the ratios ``P(>= B+1) / P(>= B)`` are checked to lie in ``ratio_bounds``.
    """
    lengths = np.asarray(lengths, dtype=float)
    n = lengths.size
    rep = StatsReport("macro-tail", {"N": n, "exact_zero": exact_zero})
    for B in B_grid:
        hits = int((lengths >= B).sum())
        if exact_zero:
            rep.bins.append(Bin.proportion(f"B={B:g}", (B + 1) * math.exp(-B), hits, n, f"abs:{tol}"))
        else:
            rep.bins.append(Bin.proportion(f"B={B:g}", float("nan"), hits, n, "info"))
            nxt = int((lengths >= B + 1).sum())
            ratio = nxt / hits if hits else 0.0
            rep.checks.append(Check(f"ratio_B={B:g}_gt", ratio, ratio_bounds[0], "gt", n, POLICY))
            rep.checks.append(Check(f"ratio_B={B:g}_lt", ratio, ratio_bounds[1], "lt", n, POLICY))
    if exact_zero:
        s, ss = float(lengths.sum()), float((lengths**2).sum())
        rep.bins.append(Bin.mean("mean", 2.0, s, ss, n))
    return rep


def kingman_check(sim: PercolationSim, t: float, m_max: int = 10, rho1_tol: float = 0.01,
                  p_min: float = 1e-3) -> StatsReport:
    """Mass of the particle of edge ``(0, 1)`` against ``m (2/(2+t))**2 (t/(2+t))**(m-1)``."""
    masses = sim.edge_mass(t, 0)
    n = masses.size
    rep = StatsReport("kingman", {"t": t, "m_max": m_max, "N": n})
    counts = np.array([(masses == m).sum() for m in range(1, m_max + 1)] + [(masses > m_max).sum()])
    probs = np.array([kingman_rho(m, t) for m in range(1, m_max + 1)])
    probs = np.append(probs, 1.0 - probs.sum())
    for m in range(1, m_max + 1):
        pol = f"abs:{rho1_tol}" if m == 1 else "3sigma"
        rep.bins.append(Bin.proportion(f"m={m}", float(probs[m - 1]), int(counts[m - 1]), n, pol))
    stat, p, cells = chi_square_fit(counts, probs)
    rep.checks.append(Check("chi2_pvalue", p, p_min, "gt", n, f"{cells} cells"))
    return rep


def gap_count_statistic(law: Law, lam: float, t: float, l: float, n_sites: int,
                        rng: np.random.Generator, batch: int = 50000) -> StatsReport:
    """Counts of long gaps near ``[0, a t]`` over independent two-sided streams.

    ``S`` counts events in ``[0, a t]`` whose preceding gap is at least
    ``a l``.  ``R`` counts events in ``[0, a t]`` whose following gap is at
    least ``a l``.  Both have mean ``a t tail_mu(a l) / m`` at every lambda.
    """
    a = compute_a_lambda(law, lam)
    h, g = a * t, a * l
    target = h * float(law.tail_mu(g)) / law.mean
    s_sum = s_sq = r_sum = r_sq = 0.0
    s_one = s_two = 0
    done = 0
    while done < n_sites:
        m = min(batch, n_sites - done)
        x0 = np.asarray(law.sample_zeta(rng, m), dtype=float)
        cur = rng.random(m) * x0
        S = ((cur <= h) & (x0 >= g)).astype(np.int64)
        R = np.zeros(m, dtype=np.int64)
        idx = np.flatnonzero(cur <= h)
        while idx.size:
            with np.errstate(over="ignore"):
                gap = np.asarray(law.sample_mu(rng, idx.size), dtype=float)
            long_gap = gap >= g
            R[idx] += long_gap
            cur[idx] += gap
            inside = cur[idx] <= h
            S[idx] += inside & long_gap
            idx = idx[inside]
        s_sum += S.sum()
        s_sq += (S.astype(float) ** 2).sum()
        r_sum += R.sum()
        r_sq += (R.astype(float) ** 2).sum()
        s_one += int((S == 1).sum())
        s_two += int((S >= 2).sum())
        done += m
    rep = StatsReport("gap-count", {"law": law.name, "lambda": lam, "t": t, "l": l, "N": n_sites})
    rep.bins.append(Bin.mean("mean_S", target, s_sum, s_sq, n_sites))
    rep.bins.append(Bin.mean("mean_R", target, r_sum, r_sq, n_sites))
    la = lam * a
    if law.regime.kind == "beta":
        beta = law.regime.beta
        scale = t * la * beta * l ** (-beta - 1.0)
        rep.bins.append(Bin.value("P[S=1]/asymptote", 1.0, s_one / n_sites / scale, 0.0, "info",
                                  "ratio tends to 1 as lambda -> 0"))
    rep.bins.append(Bin.value("P[S>=2]/(lambda a)^2", float("nan"), s_two / n_sites / la**2, 0.0,
                              "info", "bounded as lambda -> 0"))
    return rep


def theta_check(law: Law, u: float, n: int, rng: np.random.Generator, ks_tol: float = 0.01) -> StatsReport:
    """Atom at 0 of the regeneration law, and agreement of the two samplers."""
    a = sample_theta(law, u, "inverse", rng, n)
    b = sample_theta(law, u, "regeneration", rng, n)
    rep = StatsReport("theta", {"law": law.name, "u": u, "N": n})
    atom = float(law.tail_nu(law.T * u))
    rep.bins.append(Bin.proportion("P[theta=0] inverse", atom, int((a == 0).sum()), n))
    rep.bins.append(Bin.proportion("P[theta=0] regeneration", atom, int((b == 0).sum()), n))
    ks = float(stats.ks_2samp(a, b).statistic)
    rep.checks.append(Check("ks_inverse_vs_regeneration", ks, ks_tol, "lt", n))
    return rep


def theta_lambda_convergence(law: Law, lambdas, t0: float, t1: float, n: int,
                             rng: np.random.Generator, dev: float = 0.1,
                             final_tol: float = 0.1) -> StatsReport:
    """``P(|Theta - (t1 - t0)| >= dev)`` along a decreasing lambda grid."""
    if law.regime.kind != "infinity":
        raise RegimeError("theta-lambda convergence is stated for the infinity regime")
    lambdas = sorted(lambdas, reverse=True)
    rep = StatsReport("theta-lambda", {"law": law.name, "t0": t0, "t1": t1, "N": n})
    probs = []
    for lam in lambdas:
        a = compute_a_lambda(law, lam)
        th = sample_theta_lambda(law, a, t0, t1, rng, n)
        hits = int((np.abs(th - (t1 - t0)) >= dev).sum())
        probs.append(hits / n)
        rep.bins.append(Bin.proportion(f"lambda={lam:g}", 0.0, hits, n, "info"))
        rep.bins.append(Bin.value(f"P[theta>1] lambda={lam:g}", float("nan"), float((th > 1).mean()),
                                  0.0, "info"))
    incr = max((probs[i + 1] - probs[i] for i in range(len(probs) - 1)), default=0.0)
    rep.checks.append(Check("max_increase", incr, 0.0, "le", n, POLICY))
    rep.checks.append(Check("final_probability", probs[-1], final_tol, "lt", n, POLICY))
    return rep


def _match_counts(seed, lo, hi, seed_law, match_law, lam, A, T):
    scales = compute_scales(seed_law, lam)
    out = np.empty(hi - lo, dtype=np.int64)
    for r in range(lo, hi):
        sim = FFSimulator(A, lam, seed_law, match_law, substream(seed, r), scales=scales)
        out[r - lo] = sim.pending_matches(scales.a_lambda * T)[0].size
    return out


def match_poissonization(lam: float, A: float, T: float, replicas: int, seed: int,
                         match_law: Law | None = None, seed_law: Law | None = None,
                         jobs: int = 1, p_min: float = 1e-3) -> StatsReport:
    """Match counts in the rescaled box ``[0, T] x [-A, A]`` against Poisson(2 A T)."""
    seed_law = Dirac(1.0) if seed_law is None else seed_law
    chunks = [(seed, lo, hi, seed_law, match_law, lam, A, T) for lo, hi in _chunks(replicas, 1000)]
    counts = np.concatenate(_parallel(_match_counts, chunks, jobs))
    mean = 2 * A * T
    kmax = int(mean + 8 * math.sqrt(mean) + 10)
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
    stat, p, cells = chi_square_fit(obs, _poisson_probs(mean, kmax))
    rep = StatsReport("poisson-matches", {"lambda": lam, "A": A, "T": T, "N": replicas,
                                          "match_law": match_law.name if match_law else "exponential"})
    rep.bins.append(Bin.mean("mean", mean, float(counts.sum()), float((counts.astype(float) ** 2).sum()),
                             replicas, "info"))
    rep.checks.append(Check("chi2_pvalue", p, p_min, "gt", replicas, f"{cells} cells"))
    return rep


def lff_beta_vacancy(beta: float, lag: float, n: int, rng: np.random.Generator,
                     length: float = 1.0, since_previous: float = math.inf,
                     p_min: float = 1e-3) -> StatsReport:
    """Alive vacancy marks in a regenerated interval against their Poisson law."""
    counts = np.array([fresh_cloud_count(beta, length, lag, rng, since_previous) for _ in range(n)])
    mean = length * (lag ** (-beta) - (lag + since_previous) ** (-beta))
    kmax = int(mean + 8 * math.sqrt(mean) + 10)
    obs = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
    stat, p, cells = chi_square_fit(obs, _poisson_probs(mean, kmax))
    rep = StatsReport("lff-beta-vacancy", {"beta": beta, "lag": lag, "length": length, "N": n})
    rep.bins.append(Bin.mean("mean", mean, float(counts.sum()), float((counts.astype(float) ** 2).sum()), n))
    rep.checks.append(Check("chi2_pvalue", p, p_min, "gt", n, f"{cells} cells"))
    return rep


def lff_zero_cells(n: int, rng: np.random.Generator, t: float = 0.5, A: float = 1.0) -> np.ndarray:
    """``|D_t(0)|`` from independent logarithmic-regime trajectories."""
    out = np.empty(n)
    for i in range(n):
        lo, hi = simulate_lff_0(A, rng, T=max(t, 1.0)).query(0.0, t)
        out[i] = hi - lo
    return out


def two_sided_residual(law: Law, rng: np.random.Generator, t: float, n: int) -> np.ndarray:
    """Residual life at ``t`` of streams built from a split size-biased gap at 0."""
    x0 = np.asarray(law.sample_zeta(rng, n), dtype=float)
    first = rng.random(n) * x0
    return law.advance(first, t, rng) - t


def stationarity(law: Law, times, n: int, rng: np.random.Generator, ks_tol: float = 0.01,
                 route: str = "two-sided") -> StatsReport:
    """Residual life at fixed times against the delay law (one-sample KS).

    ``route="two-sided"`` starts each stream from a uniformly split
    size-biased gap, so it does not use the delay sampler at all.
    ``route="forward"`` starts from a delay draw.
    """
    rep = StatsReport("stationarity", {"law": law.name, "N": n, "route": route})
    cdf = lambda x: 1.0 - law.tail_nu(np.maximum(x, 0.0))
    for t in times:
        if route == "two-sided":
            res = two_sided_residual(law, rng, t, n)
        else:
            res = residual_life(law, rng, t, n)
        ks = float(stats.kstest(res, cdf).statistic)
        rep.checks.append(Check(f"ks_t={t:g}", ks, ks_tol, "lt", n))
    return rep


def qk_bar_report(law: Law, k_max: int = 20, tol: float = 1e-9) -> StatsReport:
    rep = StatsReport("qk-bar", {"law": law.name, "k_max": k_max})
    for k in range(k_max + 1):
        val, err = qk_bar(law, k)
        target = dirac_qk_bar(k) if isinstance(law, Dirac) else float("nan")
        rep.bins.append(Bin.value(f"k={k}", target, val, err, f"abs:{tol}"))
    return rep
