import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldseds import stats
from ldseds.errors import DegenerateStatistic, InvalidArgument, NumericError
from ldseds.stats import RankTable

scipy_stats = pytest.importorskip("scipy.stats")
scipy_special = pytest.importorskip("scipy.special")

F = None  # a failed cell


def z_curve(rel_errors, z=300.0):
    return [z * (1 + e) for e in rel_errors]


def test_convergence_speed_first_strict_crossing():
    assert stats.convergence_speed(z_curve([0.10, 0.06, 0.04]), 300.0, 0.05).cs == 3
    out = stats.convergence_speed(z_curve([0.10, 0.06]), 300.0, 0.05)
    assert out.cs is None and out.failed
    assert stats.convergence_speed([315.0, 315.0], 300.0, 0.05).cs is None  # equality does not count
    assert stats.convergence_speed([400, 310, 500], 300.0, 0.05).cs == 2


def test_convergence_speed_validation():
    with pytest.raises(InvalidArgument):
        stats.convergence_speed([], 300.0, 0.05)
    with pytest.raises(InvalidArgument):
        stats.convergence_speed([1.0], 0.0, 0.05)
    with pytest.raises(InvalidArgument):
        stats.convergence_speed([1.0], 300.0, 1.5)


@settings(max_examples=50)
@given(st.lists(st.floats(0, 2), min_size=1, max_size=50), st.floats(0.001, 0.999))
def test_convergence_speed_bounds(errs, tol):
    out = stats.convergence_speed(z_curve(errs), 300.0, tol)
    if out.cs is not None:
        assert 1 <= out.cs <= len(errs)
        assert (z_curve(errs)[out.cs - 1] - 300.0) / 300.0 < tol


@pytest.mark.parametrize("row,expected", [
    ([1515, 1281], [2, 1]),
    ([F, F], [1.5, 1.5]),
    ([5, 5, 7], [1.5, 1.5, 3]),
    ([2472, F], [1, 2]),
    ([F, 4202, 3474, 2347, 3271], [5, 4, 3, 1, 2]),
    ([F] * 5, [3] * 5),
])
def test_ranks_with_ties_examples(row, expected):
    np.testing.assert_array_equal(stats.ranks_with_ties(row), expected)


def test_ranks_need_two():
    with pytest.raises(InvalidArgument):
        stats.ranks_with_ties([1.0])


row_values = st.lists(st.one_of(st.none(), st.integers(1, 6)), min_size=2, max_size=9)


@settings(max_examples=100)
@given(row_values)
def test_ranks_match_scipy_rankdata(row):
    as_float = [np.inf if v is None else v for v in row]
    np.testing.assert_array_equal(stats.ranks_with_ties(row), scipy_stats.rankdata(as_float))
    k = len(row)
    assert stats.ranks_with_ties(row).sum() == k * (k + 1) / 2


@settings(max_examples=50)
@given(st.integers(1, 20), st.integers(2, 8), st.integers(0, 1000))
def test_rank_rows_matches_rankdata(m, k, seed):
    a = np.random.default_rng(seed).integers(0, 4, (m, k)).astype(float)
    np.testing.assert_array_equal(stats.rank_rows(a), scipy_stats.rankdata(a, axis=1))


@settings(max_examples=50)
@given(st.integers(2, 12), st.integers(2, 6), st.integers(0, 1000), st.integers(0, 5), st.integers(1, 50))
def test_improving_a_column_never_worsens_its_rank(m, k, seed, col, delta):
    col %= k
    metric = np.random.default_rng(seed).integers(1, 100, (m, k)).astype(float)
    before = RankTable.from_metric(metric.tolist()).avg_ranks[col]
    metric[:, col] -= delta
    after = RankTable.from_metric(metric.tolist()).avg_ranks[col]
    assert after <= before


def test_rank_table_layout():
    t = RankTable.from_metric([[1515, 1281], [F, F], [2472, F]], ["F1", "F3", "F6"], ["Rand", "HSS"])
    assert (t.m, t.k) == (3, 2)
    np.testing.assert_array_equal(t.ranks.sum(axis=1), 3)
    np.testing.assert_allclose(t.avg_ranks, [1.5, 1.5])
    single = RankTable.from_metric([[7]])
    assert single.ranks.tolist() == [[1.0]]
    with pytest.raises(InvalidArgument):
        RankTable.from_metric([[1, 2], [3]])


def test_friedman_examples():
    chi, tau = stats.friedman_modified((1.60, 1.40), 15, 2)
    assert chi == pytest.approx(0.600, abs=1e-9)
    assert tau == pytest.approx(7 / 12, abs=1e-9)
    assert stats.friedman_modified((1.5, 1.5), 9, 2) == (0.0, 0.0)


def test_friedman_unrounded_table_ranks():
    # N = 160, tolerance 5% column pair of the two-algorithm comparison table
    rand = [1336, 52, 745, 15, 1244, 325, 281, 172, 705, 1305, 191, 137, 793, 65, 200]
    hss = [1201, 42, 770, 13, 1048, 287, 272, 160, 632, 1205, 169, 134, 774, 64, 22]
    t = RankTable.from_metric(list(zip(rand, hss)))
    np.testing.assert_allclose(t.avg_ranks, [29 / 15, 16 / 15])
    assert stats.friedman_modified(t.avg_ranks, 15)[1] == pytest.approx(42.250, abs=1e-3)
    # the printed two-decimal ranks give a visibly different statistic
    assert stats.friedman_modified((1.93, 1.07), 15)[1] == pytest.approx(39.76, abs=0.01)


FIVE_WAY_5PCT = [
    (1515, 943, 977, 963, 916), (189, 62, 142, 94, 73), (948, 428, 496, 520, 488),
    (24, 20, 21, 19, 22), (1420, 856, 804, 870, 901), (582, 192, 195, 179, 197),
    (562, 163, 178, 171, 152), (350, 169, 154, 154, 196), (1054, 833, 874, 941, 899),
    (1995, 2068, 1841, 1766, 1747), (452, 308, 280, 345, 263), (392, 229, 251, 207, 168),
    (1656, 1499, 1646, 1501, 2115), (165, 158, 121, 118, 124), (814, 193, 256, 131, 140),
]
FIVE_WAY_1PCT = [
    (1626, 1032, 1064, 1056, 997), (2006, 1532, 1800, 1813, 1451), (F, 4202, 3474, 2347, 3271),
    (474, 128, 136, 149, 130), (F,) * 5, (2472, 1717, 1786, 1702, 1724), (908, 381, 384, 376, 335),
    (1061, 625, 610, 652, 612), (F,) * 5, (3767, 3666, 3633, 3765, 3668), (906, 831, 672, 749, 624),
    (1730, 2328, 2947, 1676, 1702), (3230, 3185, 3127, 3030, 4001), (1200, 976, 858, 914, 979), (F,) * 5,
]


def test_five_way_tables():
    t5 = RankTable.from_metric(FIVE_WAY_5PCT)
    np.testing.assert_allclose(t5.avg_ranks, [73 / 15, 35 / 15, 43.5 / 15, 35.5 / 15, 38 / 15])
    # printed AvgR row, two decimals
    np.testing.assert_allclose(np.round(t5.avg_ranks, 2), [4.87, 2.33, 2.90, 2.37, 2.53])
    # exact ranks give 11.7248 against a printed 11.728; the rounded row gives 11.80
    assert stats.friedman_modified(t5.avg_ranks, 15)[1] == pytest.approx(11.728, abs=5e-3)
    t1 = RankTable.from_metric(FIVE_WAY_1PCT)
    np.testing.assert_allclose(t1.avg_ranks, [4.4, 2.8, 2.8, 2.6, 2.4])
    assert stats.friedman_modified(t1.avg_ranks, 15)[1] == pytest.approx(4.817, abs=1e-3)


def test_friedman_against_scipy_chisquare(rng):
    # without ties scipy's Friedman chi-square equals ours
    a = rng.random((12, 4))
    t = RankTable.from_metric(a.tolist())
    chi, _ = stats.friedman_modified(t.avg_ranks, 12, 4)
    assert chi == pytest.approx(scipy_stats.friedmanchisquare(*a.T).statistic, rel=1e-12)


def test_friedman_degenerate():
    with pytest.raises(DegenerateStatistic, match="m\\(k-1\\)"):
        stats.friedman_modified((1.0, 2.0), 10, 2)
    with pytest.raises(InvalidArgument):
        stats.friedman_modified((1.0, 2.0), 1, 2)
    with pytest.raises(InvalidArgument):
        stats.friedman_modified((1.0, 2.0, 3.0), 5, 2)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 20), st.floats(0.01, 20), st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    assert stats.betainc(a, b, x) == pytest.approx(scipy_special.betainc(a, b, x), abs=1e-12)


def test_betainc_validation():
    with pytest.raises(InvalidArgument):
        stats.betainc(0, 1, 0.5)
    with pytest.raises(InvalidArgument):
        stats.betainc(1, 1, 1.5)


def test_betainc_nonconvergence_is_reported():
    with pytest.raises(NumericError, match="did not converge"):
        stats._betacf(5000.0, 5000.0, 0.5, max_iter=3)


@pytest.mark.parametrize("df1,df2,expected", [(1, 14, 4.600), (4, 56, 2.537), (4, 36, 2.634)])
def test_f_critical_examples(df1, df2, expected):
    assert stats.f_critical(0.05, df1, df2) == pytest.approx(expected, abs=5e-3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.001, 0.5), st.integers(1, 30), st.integers(1, 300))
def test_f_critical_matches_scipy(alpha, df1, df2):
    ours = stats.f_critical(alpha, df1, df2)
    ref = scipy_stats.f.ppf(1 - alpha, df1, df2)
    assert ours == pytest.approx(ref, abs=2e-6, rel=1e-7)


def test_f_cdf_matches_scipy():
    for x in (0.1, 1.0, 3.3, 40.0):
        assert stats.f_cdf(x, 4, 56) == pytest.approx(scipy_stats.f.cdf(x, 4, 56), abs=1e-12)
    assert stats.f_cdf(-1.0, 2, 3) == 0.0


def test_f_critical_validation():
    for args in [(0.0, 1, 1), (1.0, 1, 1), (0.05, 0, 3), (0.05, 3, 0)]:
        with pytest.raises(InvalidArgument):
            stats.f_critical(*args)


def test_nemenyi_q_table_matches_studentized_range():
    for k, q in stats.NEMENYI_Q[0.05].items():
        ref = scipy_stats.studentized_range.ppf(0.95, k, np.inf) / math.sqrt(2)
        assert q == pytest.approx(ref, abs=1e-3)


@pytest.mark.parametrize("m,expected", [(15, 1.575), (19, 1.399), (10, 1.929)])
def test_nemenyi_examples(m, expected):
    assert stats.nemenyi_cd(5, m) == pytest.approx(expected, abs=1e-2)


def test_nemenyi_q_pinned_by_cds():
    q = 1.575 / math.sqrt(5 * 6 / (6 * 15))
    assert stats.NEMENYI_Q[0.05][5] == pytest.approx(q, abs=2e-3)


def test_nemenyi_unsupported():
    with pytest.raises(InvalidArgument, match="supported"):
        stats.nemenyi_cd(11, 10)
    with pytest.raises(InvalidArgument, match="supported"):
        stats.nemenyi_cd(5, 10, alpha=0.1)


def test_pairwise_significance():
    sig = stats.pairwise_significance([4.87, 2.33, 2.90, 2.37, 2.53], 1.575)
    assert sig[0, 1] and sig[0, 2] and sig[0, 3] and sig[0, 4]
    assert not sig[1, 2] and not sig[0, 0]
    assert np.array_equal(sig, sig.T)


def test_significance_report():
    t = RankTable.from_metric(FIVE_WAY_5PCT)
    rep = stats.significance_report(t, 0.05)
    assert rep.significant == (rep.tau_f > rep.tau_critical)
    assert rep.tau_critical == pytest.approx(2.537, abs=5e-3)
    assert rep.cd == pytest.approx(1.575, abs=1e-2)
    r = t.avg_ranks
    np.testing.assert_array_equal(rep.pairwise_significant[0, 1:], np.abs(r[0] - r[1:]) >= rep.cd)
    wide = RankTable.from_metric(np.random.default_rng(0).random((6, 12)).tolist())
    assert stats.significance_report(wide).cd is None
