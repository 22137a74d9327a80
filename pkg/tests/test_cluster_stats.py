import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyroscale.cluster_stats import (Bin, Check, StatsReport, chi_square_fit, cluster_size_histogram,
                                     dirac_qk_bar, discrete_cluster_sizes, gap_count_statistic,
                                     kingman_check, kingman_rho, lff_zero_cells, macro_tail,
                                     qk_bar, qk_bar_report, qk_of_z, reports_csv, stationarity)
from pyroscale.discrete_ff import percolation_mode
from pyroscale.renewal import Dirac, Exponential, ParetoTail, RegimeError
from pyroscale.rng import substream


def test_qk_of_z_examples():
    d = Dirac(1.0)
    assert qk_of_z(d, 0, 0.3) == pytest.approx(0.7)
    assert qk_of_z(d, 2, 0.5) == pytest.approx(2 * 0.25 * 0.25)
    assert qk_of_z(d, 3, 1.0) == 0.0
    with pytest.raises(RegimeError):
        qk_of_z(Exponential(), 1, 0.5)


@given(z=st.floats(0.0, 0.95))
@settings(max_examples=50, deadline=None)
def test_qk_sums_to_one(z):
    total = sum(qk_of_z(Dirac(1.0), k, z) for k in range(2000))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_qk_bar_golden():
    for k in range(21):
        val, err = qk_bar(Dirac(1.0), k)
        assert abs(val - dirac_qk_bar(k)) < 1e-9
        assert err < 1e-9
    # the tail beyond K is about 2 / K
    assert 0 < 1 - sum(dirac_qk_bar(k) for k in range(5000)) < 2 / 5000
    assert qk_bar_report(Dirac(1.0)).passed


def test_kingman_rho():
    assert kingman_rho(2, 2.0) == pytest.approx(0.25)
    assert kingman_rho(1, 1.0) == pytest.approx(4 / 9)
    assert sum(kingman_rho(m, 1.0) for m in range(1, 400)) == pytest.approx(1.0)


def test_bin_verdicts_and_rederive():
    b = Bin.proportion("p", 0.5, 5100, 10_000)
    assert b.stderr == pytest.approx(math.sqrt(0.51 * 0.49 / 1e4))
    assert b.verdict
    assert not Bin.proportion("p", 0.5, 5400, 10_000).verdict
    assert Bin.value("v", 1.0, 1.0 + 1e-10).verdict
    assert not Bin.value("v", 1.0, 1.0 + 1e-8).verdict
    assert Bin.proportion("p", float("nan"), 3, 10).verdict
    m = Bin.mean("m", 2.0, 20.5, 50.0, 10)
    assert m.rederive() == m
    assert b.rederive() == b


def test_check_kinds():
    assert Check("a", 0.02, 0.001, "gt").passed
    assert not Check("a", 0.02, 0.01, "lt").passed
    assert Check("a", 0.0, 0.0, "le").passed


def test_merge_pools_counts():
    r1 = StatsReport("e", {}, [Bin.proportion("k=0", 0.5, 40, 100)])
    r2 = StatsReport("e", {}, [Bin.proportion("k=0", 0.5, 70, 100)])
    m = r1.merge(r2)
    assert m.bin("k=0").empirical == pytest.approx(110 / 200)
    assert m.bin("k=0").n == 200
    with pytest.raises(ValueError):
        r1.merge(StatsReport("other", {}, []))


def test_reports_csv_header():
    r = StatsReport("qk-bar", {"law": "dirac"}, [Bin.value("k=0", 0.5, 0.5)])
    lines = reports_csv([r]).splitlines()
    assert lines[0] == "estimator,param,bin,target,empirical,stderr,N,verdict"
    assert lines[1].startswith("qk-bar,law=dirac,k=0,0.5,0.5,")
    assert lines[1].endswith(",pass")


def test_chi_square_pooling():
    obs = np.array([50, 30, 15, 4, 1])
    probs = np.array([0.5, 0.3, 0.15, 0.04, 0.01])
    stat, p, cells = chi_square_fit(obs, probs)
    assert cells == 4
    assert stat == pytest.approx(0.0)
    # a sparse remainder is folded into the last full cell
    obs = np.array([50, 30, 16, 3, 1])
    probs = np.array([0.5, 0.3, 0.16, 0.03, 0.01])
    stat, p, cells = chi_square_fit(obs, probs)
    assert cells == 3
    assert stat == pytest.approx(0.0)
    assert p == pytest.approx(1.0)


def test_histogram_without_fires():
    sizes = discrete_cluster_sizes(Dirac(1.0), 1e-2, 1.0, 0.6, 2000, seed=3, fires=False)
    rep = cluster_size_histogram(sizes, Dirac(1.0), k_max=6, t=0.6)
    assert rep.passed, rep.failures()


def test_macro_tail_exact_zero():
    lengths = lff_zero_cells(20_000, substream(4))
    rep = macro_tail(lengths, [0.5, 1.0, 2.0], exact_zero=True, tol=0.02)
    assert rep.passed, rep.failures()


def test_macro_tail_ratios():
    rep = macro_tail(substream(9).gamma(2.0, 1.0, 10_000), [1.0, 2.0])
    assert all(c.passed for c in rep.checks)


def test_kingman_small():
    rep = kingman_check(percolation_mode(0.05, 1000, rng=substream(5), replicas=20_000), 1.0)
    assert rep.passed, rep.failures()


def test_gap_count_dirac_long_gaps_absent():
    rep = gap_count_statistic(Dirac(1.0), 1e-2, 1.0, 1.5, 1000, substream(6))
    assert rep.bin("mean_S").empirical == 0.0 and rep.bin("mean_R").empirical == 0.0
    assert rep.passed


def test_gap_count_pareto():
    rep = gap_count_statistic(ParetoTail(2.0), 1e-2, 1.0, 0.5, 20_000, substream(7))
    assert rep.bin("mean_S").verdict and rep.bin("mean_R").verdict


@pytest.mark.parametrize("route", ["two-sided", "forward"])
def test_stationarity_routes(route):
    rep = stationarity(Exponential(), [0.0, 2.0], 20_000, substream(8), ks_tol=0.02, route=route)
    assert rep.passed, rep.failures()


def test_reports_csv_plain_floats():
    counts = np.array([1, 2, 3])
    r = StatsReport("e", {}, [Bin.mean("m", 2.0, counts.sum(), (counts**2).sum(), 3)])
    text = reports_csv([r])
    assert "np." not in text
    assert text.splitlines()[1].split(",")[4] == "2.0"
