import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from pyroscale.renewal import (Dirac, Exponential, LogTail, ParetoTail, RegimeError, RenewalStream,
                               WeibullTail, law_from_dict, phi_S, psi_S, sample_nu, sample_zeta,
                               stream_events, stream_two_sided, tail_mu, tail_nu)
from pyroscale.rng import substream

LAWS = [Dirac(1.0), Dirac(2.5), Exponential(), WeibullTail(2.0), WeibullTail(0.7), ParetoTail(2.0),
        ParetoTail(3.5), LogTail()]
IDS = [f"{l.name}-{i}" for i, l in enumerate(LAWS)]


def _tail_integral(law, t):
    """Integral of tail_mu over (t, inf) by adaptive quadrature in y = log(1 + s)."""
    if isinstance(law, Dirac):
        return max(law.T - t, 0.0)
    if isinstance(law, LogTail):
        # in L = log(e + s) the tail mass density is e / L**2; past L = 700 it is added exactly
        f = lambda L: float(law.tail_mu(math.exp(L) - math.e)) * math.exp(L)
        L0 = math.log(math.e + t)
        cuts = [L0, L0 + 1, L0 + 10, L0 + 100, 700.0]
        return sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400)[0]
                   for a, b in zip(cuts, cuts[1:])) + math.e / 700.0
    f = lambda y: float(law.tail_mu(math.expm1(y))) * math.exp(y) if y < 700 else 0.0
    y0 = math.log1p(t)
    cuts = [y0, y0 + 0.5, y0 + 2, y0 + 8, y0 + 32, y0 + 128, y0 + 512]
    total = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=400)[0]
                for a, b in zip(cuts, cuts[1:]))
    return total + integrate.quad(f, cuts[-1], np.inf, epsabs=0, epsrel=1e-12, limit=400)[0]


def test_tail_mu_examples():
    assert tail_mu(Dirac(1.0), 0.5) == 1.0
    assert tail_mu(Dirac(1.0), 1.5) == 0.0
    assert tail_mu(ParetoTail(2.0), 2.0) == pytest.approx(0.125, abs=1e-15)
    assert tail_mu(Exponential(), 1.0) == pytest.approx(math.exp(-1), rel=1e-14)


def test_tail_nu_examples():
    assert tail_nu(Dirac(1.0), 0.25) == pytest.approx(0.75)
    assert tail_nu(LogTail(), 0.0) == pytest.approx(1.0, abs=1e-15)
    assert tail_nu(ParetoTail(2.0), 2.0) == pytest.approx(0.25, abs=1e-15)


def test_nu_quantiles():
    assert Dirac(1.0).nu_isf(0.5) == pytest.approx(0.5)
    assert ParetoTail(2.0).nu_isf(0.25) == pytest.approx(2.0)
    lt = LogTail()
    assert lt.nu_isf(0.5) == pytest.approx(math.exp(2) - math.e)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_mean_is_integral_of_tail(law):
    assert _tail_integral(law, 0.0) == pytest.approx(law.mean, rel=1e-9)


def test_closed_means():
    assert ParetoTail(2.0).mean == 1.0
    assert LogTail().mean == pytest.approx(math.e)
    assert Dirac(3.0).mean == 3.0
    assert WeibullTail(2.0).mean == pytest.approx(math.gamma(1.5))


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_tail_nu_matches_quadrature(law):
    rng = substream(11, 1)
    span = law.T * 1.2 if isinstance(law, Dirac) else 20.0
    for t in rng.uniform(0, span, 30):
        expect = _tail_integral(law, t) / law.mean
        got = float(tail_nu(law, t))
        assert got == pytest.approx(expect, rel=1e-8, abs=1e-300)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
@given(t=st.floats(0, 1e6), s=st.floats(0, 1e6))
@settings(max_examples=60, deadline=None)
def test_tails_are_monotone_probabilities(law, t, s):
    lo, hi = min(t, s), max(t, s)
    for f in (law.tail_mu, law.tail_nu):
        a, b = float(f(lo)), float(f(hi))
        assert 0.0 <= b <= a <= 1.0
    assert float(law.tail_mu(0.0)) == 1.0
    assert float(law.tail_nu(0.0)) == pytest.approx(1.0)


@pytest.mark.parametrize("law", [l for l in LAWS if not isinstance(l, Dirac)], ids=IDS[2:])
@given(u=st.floats(1e-6, 1 - 1e-6))
@settings(max_examples=50, deadline=None)
def test_nu_isf_inverts_tail(law, u):
    with np.errstate(over="ignore"):
        x = float(law.nu_isf(u))
    if math.isinf(x):
        # the log-tail quantile exp(1/u) - e leaves the float range below u = 1/709.78
        assert isinstance(law, LogTail) and u < 1 / 709.7
        return
    assert float(law.tail_nu(x)) == pytest.approx(u, rel=1e-7)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_sample_nu_ks(law):
    # N raised from 1e4 so that a correct sampler passes KS < 0.01 reliably
    x = sample_nu(law, substream(12, 2), 100_000)
    d = stats.kstest(x, lambda v: 1.0 - law.tail_nu(np.maximum(v, 0.0))).statistic
    assert d < 0.01


def test_exponential_nu_mean():
    x = sample_nu(Exponential(), substream(12, 3), 10**6)
    assert abs(x.mean() - 1.0) < 3 * x.std() / 1e3


def test_zeta_dirac_and_exponential():
    assert np.all(sample_zeta(Dirac(1.0), substream(1), 1000) == 1.0)
    z = sample_zeta(Exponential(), substream(12, 4), 10**6)
    assert abs(z.mean() - 2.0) < 3 * z.std() / 1e3


def _zeta_cdf(law, t):
    # int_0^t s mu(ds) / m, by parts: (int_0^t tail_mu - t tail_mu(t)) / m
    head = law.mean - _tail_integral(law, t)
    return (head - t * float(law.tail_mu(t))) / law.mean


@pytest.mark.parametrize("law,tol", [(ParetoTail(2.0), 0.005), (WeibullTail(2.0), 0.01),
                                     (LogTail(), 0.01)], ids=["pareto", "weibull", "logtail"])
def test_zeta_against_quadrature(law, tol):
    z = np.sort(sample_zeta(law, substream(12, 5), 100_000))
    grid = np.quantile(z, np.linspace(0.005, 0.995, 60))
    emp = np.searchsorted(z, grid, side="right") / z.size
    ref = np.array([_zeta_cdf(law, g) for g in grid])
    assert np.max(np.abs(emp - ref)) < tol


def test_psi_examples():
    assert psi_S(Dirac(1.0), 0.3) == pytest.approx(0.3)
    assert psi_S(Exponential(), 0.5) == pytest.approx(math.log(2), rel=1e-12)
    for law in (Dirac(1.0), Exponential(), WeibullTail(2.0)):
        assert psi_S(law, 0.0) == 0.0
    assert psi_S(Exponential(), 1.0) == math.inf
    with pytest.raises(RegimeError):
        psi_S(ParetoTail(2.0), 0.5)
    with pytest.raises(RegimeError):
        psi_S(LogTail(), 0.5)


@pytest.mark.parametrize("law", [Dirac(1.0), Dirac(2.0), Exponential(), WeibullTail(2.0), WeibullTail(0.7)])
def test_psi_inverts_nu_cdf(law):
    zs = np.linspace(0.0, 0.999, 200)
    ps = [psi_S(law, z) for z in zs]
    assert all(a < b for a, b in zip(ps, ps[1:]))
    assert max(abs(float(law.nu_cdf(p)) - z) for p, z in zip(ps, zs)) < 1e-9


def test_phi_examples():
    assert phi_S(Exponential(), math.e) == pytest.approx(1.0, rel=1e-10)
    assert phi_S(ParetoTail(2.0), 8.0) == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(RegimeError):
        phi_S(Dirac(1.0), 2.0)


@pytest.mark.parametrize("law", [Exponential(), WeibullTail(2.0), ParetoTail(2.0), LogTail()])
def test_phi_is_increasing_inverse(law):
    zs = np.geomspace(0.01, 1e6, 100)
    ph = [phi_S(law, z) for z in zs]
    assert all(a < b for a, b in zip(ph, ph[1:]))
    for p, z in zip(ph, zs):
        assert p / float(law.tail_nu(p)) == pytest.approx(z, rel=1e-10)


def test_stream_events_dirac():
    for r in range(20):
        ev = stream_events(Dirac(1.0), substream(13, r), 10.0)
        assert ev.size == 10
        assert np.allclose(np.diff(ev), 1.0)


def test_stream_events_exponential_rate():
    counts = np.array([stream_events(Exponential(), substream(14, r), 1000.0).size for r in range(200)])
    rate = counts / 1000.0
    assert abs(rate.mean() - 1.0) < 3 * rate.std(ddof=1) / math.sqrt(rate.size)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_stream_events_increasing_in_window(law):
    rng = substream(15)
    for _ in range(50):
        ev = stream_events(law, rng, 7.0)
        assert np.all(ev > 0) and np.all(ev <= 7.0)
        assert np.all(np.diff(ev) > 0)


def test_two_sided_dirac_gap():
    rng = substream(16)
    for _ in range(100):
        neg, pos = stream_two_sided(Dirac(1.0), rng, 3.0)
        assert pos[0] - neg[-1] == pytest.approx(1.0)
        assert neg[-1] < 0 <= pos[0]


@pytest.mark.parametrize("law", [Dirac(1.0), Exponential(), ParetoTail(2.0), WeibullTail(2.0)])
def test_two_sided_first_points_are_stationary(law):
    rng = substream(17)
    t1, back = [], []
    for _ in range(10_000):
        neg, pos = stream_two_sided(law, rng, 0.5)
        t1.append(pos[0])
        back.append(-neg[-1])
    cdf = lambda v: 1.0 - law.tail_nu(np.maximum(v, 0.0))
    # 0.02 is the 3-sigma-ish KS band at this sample size
    assert stats.kstest(t1, cdf).pvalue > 1e-3
    assert stats.kstest(back, cdf).pvalue > 1e-3


def test_renewal_stream_peek_next():
    s = RenewalStream(Exponential(), substream(18))
    first = s.peek()
    assert s.next() == first
    ev = s.events_until(50.0)
    assert np.all(np.diff(ev) > 0)
    assert ev[0] > first


def test_law_from_dict():
    assert law_from_dict({"law": "pareto", "beta": 2.0}) == ParetoTail(2.0)
    assert law_from_dict({"law": "dirac"}) == Dirac(1.0)
    with pytest.raises(ValueError):
        law_from_dict({"law": "pareto", "alpha": 2.0})
    with pytest.raises(ValueError):
        law_from_dict({"law": "gamma"})
    for law in LAWS:
        assert law_from_dict(law.to_dict()) == law
