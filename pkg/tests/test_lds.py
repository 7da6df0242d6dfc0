import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldseds import lds
from ldseds.errors import InvalidArgument
from ldseds.lds import GeneratorId


def radical_inverse_oracle(index, base, perm=None):
    # exact rational digit reversal
    out, scale = Fraction(0), Fraction(1, base)
    while index:
        index, digit = divmod(index, base)
        out += (perm[digit] if perm is not None else digit) * scale
        scale /= base
    return out


def test_primes_start():
    assert lds.primes()[:10].tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert len(lds.primes()) == 2000
    assert lds.primes()[-1] == 17389


@pytest.mark.parametrize("index,base,expected", [(0, 2, 0.0), (3, 2, 0.75), (5, 3, 7 / 9)])
def test_radical_inverse_examples(index, base, expected):
    assert lds.radical_inverse(index, base) == pytest.approx(expected, abs=1e-15)


@given(st.integers(0, 10**9), st.sampled_from([2, 3, 5, 7, 11, 97, 17389]))
def test_radical_inverse_matches_exact_digits(index, base):
    assert lds.radical_inverse(index, base) == pytest.approx(float(radical_inverse_oracle(index, base)), abs=1e-14)


@given(st.integers(0, 10**6), st.sampled_from([3, 5, 13]), st.integers(0, 2**32))
def test_scrambled_radical_inverse(index, base, seed):
    perm = lds.digit_permutation(base, seed)
    expected = float(radical_inverse_oracle(index, base, perm.tolist()))
    assert lds.radical_inverse(index, base, perm) == pytest.approx(expected, abs=1e-14)


def test_radical_inverse_rejects_bad_input():
    with pytest.raises(InvalidArgument):
        lds.radical_inverse(3, 1)
    with pytest.raises(InvalidArgument):
        lds.radical_inverse(3, 3, [1, 0, 2])  # does not fix 0
    with pytest.raises(InvalidArgument):
        lds.radical_inverse(-1, 2)


def test_digit_permutation_fixes_zero():
    for base in (2, 3, 5, 101):
        p = lds.digit_permutation(base, 9)
        assert p[0] == 0
        assert sorted(p.tolist()) == list(range(base))


def test_halton_rows():
    pts = lds.generate_halton(3, 2).points
    expected = np.array([[1 / 2, 1 / 3], [1 / 4, 2 / 3], [3 / 4, 1 / 9]])
    np.testing.assert_allclose(pts, expected, rtol=0, atol=1e-15)


def test_scrambled_with_identity_permutations_is_plain(monkeypatch):
    monkeypatch.setattr(lds, "digit_permutation", lambda base, seed: np.arange(base))
    np.testing.assert_array_equal(lds.generate_halton(50, 7, scramble_seed=3).points,
                                  lds.generate_halton(50, 7).points)


def test_scrambled_halton_differs_and_repeats():
    a = lds.generate_halton(64, 6, scramble_seed=1).points
    b = lds.generate_halton(64, 6, scramble_seed=2).points
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, lds.generate_halton(64, 6, scramble_seed=1).points)
    # base 2 has a single nonzero digit, so its column is never scrambled
    np.testing.assert_array_equal(a[:, 0], lds.generate_halton(64, 1).points[:, 0])


def test_halton_dimension_limit():
    lds.generate_halton(2, 2000)
    with pytest.raises(InvalidArgument, match="2000"):
        lds.generate_halton(2, 2001)


def test_sobol_first_dimension_is_van_der_corput():
    pts = lds.generate_sobol(8, 1).points[:, 0]
    np.testing.assert_array_equal(pts, [lds.radical_inverse(i, 2) for i in range(8)])
    assert pts[1:4].tolist() == [0.5, 0.25, 0.75]


def test_sobol_origin():
    assert np.all(lds.generate_sobol(1, 40).points == 0.0)


@pytest.mark.parametrize("k", [1, 4, 8, 10])
def test_sobol_dyadic_net(k):
    pts = lds.generate_sobol(2**k, 5).points
    for j in range(5):
        counts = np.bincount(np.floor(pts[:, j] * 2**k).astype(int), minlength=2**k)
        assert np.all(counts == 1)


def test_sobol_matches_reference_implementation():
    qmc = pytest.importorskip("scipy.stats.qmc")
    ours = lds.generate_sobol(256, 50).points
    theirs = qmc.Sobol(50, scramble=False).random_base2(8)
    # scipy emits Gray-code order; the sets coincide for a full power of two
    np.testing.assert_array_equal(np.array(sorted(map(tuple, ours))), np.array(sorted(map(tuple, theirs))))


def test_sobol_start_index_is_a_slice():
    full = lds.generate_sobol(40, 6).points
    np.testing.assert_array_equal(lds.generate_sobol(10, 6, start_index=30).points, full[30:])


def test_sobol_limit():
    assert lds.sobol_max_dim() == 1024
    with pytest.raises(InvalidArgument):
        lds.generate_sobol(4, 1025)


def test_hua_wang_values():
    pts = lds.generate_hua_wang(2, 3).points
    assert pts[0, 0] == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    assert pts[1, 0] == pytest.approx(2 * math.sqrt(2) - 2, abs=1e-15)
    assert pts[0, 2] == pytest.approx(math.sqrt(5) - 2, abs=1e-15)


def test_uniform_determinism_and_column_independence():
    a = lds.random_uniform(30, 5, seed=4).points
    np.testing.assert_array_equal(a, lds.random_uniform(30, 5, seed=4).points)
    assert not np.array_equal(a, lds.random_uniform(30, 5, seed=5).points)
    np.testing.assert_array_equal(lds.uniform_columns(30, [3, 1], 4), a[:, [3, 1]])


@settings(max_examples=40, deadline=None)
@given(gid=st.sampled_from(["halton", "scrambled_halton", "sobol", "hua_wang", "uniform"]),
       n=st.integers(1, 300), d=st.integers(1, 60), seed=st.integers(0, 2**31))
def test_generators_in_unit_cube_and_pure(gid, n, d, seed):
    a = lds.generate(gid, n, d, seed)
    assert a.points.shape == (n, d)
    assert np.all((a.points >= 0) & (a.points < 1))
    np.testing.assert_array_equal(a.points, lds.generate(gid, n, d, seed).points)
    assert not a.points.flags.writeable


def test_point_file_round_trip(tmp_path):
    ps = lds.generate_halton(20, 3, scramble_seed=5)
    path = tmp_path / "pts.txt"
    lds.save_point_set(ps, path)
    back = lds.load_point_set(path, d=3)
    np.testing.assert_array_equal(back.points, ps.points)
    assert back.generator_id is GeneratorId.EXTERNAL


@pytest.mark.parametrize("text,msg", [
    ("0.1 0.2\n0.3\n", "columns"),
    ("0.1 1.0\n", r"\[0, 1\)"),
    ("0.1 abc\n", "pts.txt:1"),
    ("# only a comment\n", "no points"),
])
def test_point_file_validation(tmp_path, text, msg):
    path = tmp_path / "pts.txt"
    path.write_text(text)
    with pytest.raises(InvalidArgument, match=msg):
        lds.load_point_set(path)


def test_point_file_dimension_check(tmp_path):
    path = tmp_path / "pts.txt"
    path.write_text("# header\n0.1 0.2\n\n0.3 0.4\n")
    assert lds.load_point_set(path).n == 2
    with pytest.raises(InvalidArgument, match="expected 3"):
        lds.load_point_set(path, d=3)


@pytest.mark.parametrize("pts,expected", [([0.5], 0.5), ([0.25, 0.75], 0.25), ([0.0, 1.0], 0.5)])
def test_dispersion_exact_examples(pts, expected):
    est = lds.dispersion_exact_1d(pts)
    assert est.value == expected and est.exact


def test_dispersion_exact_empty():
    with pytest.raises(InvalidArgument):
        lds.dispersion_exact_1d([])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=30))
def test_dispersion_exact_against_grid(pts):
    grid = np.linspace(0, 1, 20001)
    brute = np.max(np.min(np.abs(grid[:, None] - np.array(pts)[None, :]), axis=1))
    exact = lds.dispersion_exact_1d(pts).value
    assert brute <= exact + 1e-12
    assert exact - brute <= 1 / 20000


def test_dispersion_mc_single_point_corner():
    est = lds.dispersion_mc(np.array([[0.5, 0.5]]), 100_000, probe_seed=0)
    assert est.value <= math.sqrt(0.5)
    assert est.value > math.sqrt(0.5) - 0.01
    assert not est.exact and est.probe_count == 100_000


def test_dispersion_mc_close_to_exact_in_1d(rng):
    pts = rng.random(25)
    est = lds.dispersion_mc(pts, 100_000, probe_seed=3).value
    exact = lds.dispersion_exact_1d(pts).value
    assert est <= exact
    assert exact - est < 0.01


def test_dispersion_mc_superset_does_not_increase(rng):
    pts = rng.random((40, 3))
    more = np.vstack([pts, rng.random((20, 3))])
    assert lds.dispersion_mc(more, 20_000, 1).value <= lds.dispersion_mc(pts, 20_000, 1).value


def test_dispersion_mc_chunking_invariant(rng):
    pts = rng.random((30, 4))
    a = lds.dispersion_mc(pts, 10_000, 8, chunk=4096).value
    b = lds.dispersion_mc(pts, 10_000, 8, chunk=333).value
    assert a == b


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=20), st.integers(0, 1000))
def test_dispersion_mc_is_lower_bound_in_1d(pts, seed):
    assert lds.dispersion_mc(pts, 2000, seed).value <= lds.dispersion_exact_1d(pts).value + 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 50), st.integers(1, 8), st.integers(0, 100))
def test_dispersion_mc_within_diameter(n, d, seed):
    pts = lds.random_uniform(n, d, seed).points
    assert 0 <= lds.dispersion_mc(pts, 500, seed).value <= math.sqrt(d)
