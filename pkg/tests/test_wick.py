import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfim_magic.freefermion import build_kernel_finite, build_kernel_thermodynamic
from tfim_magic.oracle import ground_state_of, pauli_expectation
from tfim_magic.wick import (
    MajoranaMonomial,
    PauliString,
    colex_rank,
    enumerate_balanced_monomials,
    majorana_a,
    majorana_b,
    majorana_to_pauli,
    monomial_count,
    monomial_expectation,
    monomial_index,
    pauli_to_majorana,
    wick_determinant,
)

words = st.integers(1, 12).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_pauli_string_validation_and_phase():
    assert PauliString("XZ", 6).phase == 2
    with pytest.raises(ValueError):
        PauliString("XA")
    with pytest.raises(ValueError):
        PauliString("X") * PauliString("XX")


@pytest.mark.parametrize("a,b", list(itertools.product("IXYZ", repeat=2)))
def test_single_site_products_match_matrices(a, b):
    p, q = PauliString(a), PauliString(b)
    assert np.allclose((p * q).to_matrix(), p.to_matrix() @ q.to_matrix())


@given(words, st.integers(0, 3), st.data())
@settings(max_examples=50)
def test_string_product_matches_matrices(w, e, data):
    if len(w) > 5:
        w = w[:5]
    v = data.draw(st.text("IXYZ", min_size=len(w), max_size=len(w)))
    p, q = PauliString(w, e), PauliString(v)
    assert np.allclose((p * q).to_matrix(), p.to_matrix() @ q.to_matrix())


def test_masks():
    assert PauliString("XYZI").masks() == (0b1100, 0b0110)


def test_majorana_definitions():
    assert majorana_a(3, 4).word == "ZZXI"
    assert majorana_b(1, 2).word == "YI"


def test_monomial_validation():
    with pytest.raises(ValueError):
        MajoranaMonomial((2, 1), ())
    with pytest.raises(ValueError):
        MajoranaMonomial((1, 1), ())
    with pytest.raises(ValueError):
        MajoranaMonomial((0,), ())
    assert MajoranaMonomial((1, 3), (2,)).balanced is False


@pytest.mark.parametrize(
    "word,a,b,phase",
    [
        ("X", (1,), (), 0),
        ("Z", (1,), (1,), 3),
        ("XX", (2,), (1,), 1),
        ("ZZ", (1, 2), (1, 2), 0),
        ("I", (), (), 0),
    ],
)
def test_pauli_to_majorana_examples(word, a, b, phase):
    m, e = pauli_to_majorana(PauliString(word))
    assert (m.a_sites, m.b_sites, e) == (a, b, phase)


def test_identity_and_z_monomials():
    assert majorana_to_pauli(MajoranaMonomial(), 2) == PauliString("II")
    # A₁B₁ = i Z₁
    assert majorana_to_pauli(MajoranaMonomial((1,), (1,)), 1) == PauliString("Z", 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_round_trip_exhaustive(n):
    for letters in itertools.product("IXYZ", repeat=n):
        p = PauliString("".join(letters))
        m, e = pauli_to_majorana(p)
        back = majorana_to_pauli(m, n)
        assert back.word == p.word
        assert (back.phase + e) % 4 == p.phase


@given(words, st.integers(0, 3))
@settings(max_examples=400)
def test_round_trip_random(w, e):
    p = PauliString(w, e)
    m, k = pauli_to_majorana(p)
    back = majorana_to_pauli(m, len(w))
    assert back.word == w and (back.phase + k) % 4 == p.phase


@pytest.mark.slow
def test_round_trip_ten_thousand_words():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        n = int(rng.integers(1, 13))
        w = "".join(rng.choice(list("IXYZ"), size=n))
        m, e = pauli_to_majorana(PauliString(w))
        back = majorana_to_pauli(m, n)
        assert back.word == w and (back.phase + e) % 4 == 0


def _cofactor_det(a):
    k = a.shape[0]
    if k == 0:
        return 1.0
    if k == 1:
        return a[0, 0]
    return sum((-1) ** c * a[0, c] * _cofactor_det(np.delete(a[1:], c, axis=1)) for c in range(k))


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=60)
def test_determinant_vs_cofactor(k, seed):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-1, 1, size=(7, 7))
    rows = tuple(sorted(rng.choice(7, size=k, replace=False) + 1))
    cols = tuple(sorted(rng.choice(7, size=k, replace=False) + 1))
    d = wick_determinant(g, MajoranaMonomial(rows, cols))
    ref = _cofactor_det(g[np.ix_(np.array(rows) - 1, np.array(cols) - 1)])
    assert d == pytest.approx(ref, abs=1e-12)


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_row_swap_antisymmetry(k, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, size=(k, k))
    b = a[[1, 0] + list(range(2, k))]
    m = MajoranaMonomial(tuple(range(1, k + 1)), tuple(range(1, k + 1)))
    da, db = wick_determinant(a, m), wick_determinant(b, m)
    assert da == pytest.approx(-db, abs=1e-12)
    assert da**2 == pytest.approx(db**2, abs=1e-12)
    assert da**4 == pytest.approx(db**4, abs=1e-12)


def test_determinant_small_cases():
    g = np.array([[0.3, -0.2], [0.5, 0.9]])
    assert wick_determinant(g, MajoranaMonomial()) == 1.0
    assert wick_determinant(g, MajoranaMonomial((2,), (1,))) == 0.5
    assert wick_determinant(g, MajoranaMonomial((1, 2), (1,))) == 0.0


def test_four_point_thermodynamic_vs_ed():
    lam = 1.0
    tl = build_kernel_thermodynamic(lam, 2)
    m = MajoranaMonomial((1, 2), (1, 2))
    g0 = tl.entries[0, 0]
    assert wick_determinant(tl, m) == pytest.approx(g0 * g0 - tl.entries[0, 1] * tl.entries[1, 0], abs=1e-14)
    gs = ground_state_of(8, lam)
    ed = pauli_expectation(gs, majorana_to_pauli(m, 8)).real
    assert abs(monomial_expectation(tl, m).real - ed) < 0.05
    fin = build_kernel_finite(lam, 8)
    assert abs(monomial_expectation(fin, m).real - ed) < 1e-10


@pytest.mark.parametrize("lam", [0.5, 1.3])
def test_wick_expectations_match_ed(lam):
    n = 4
    kern = build_kernel_finite(lam, n)
    gs = ground_state_of(n, lam)
    for m in enumerate_balanced_monomials(n):
        ed = pauli_expectation(gs, majorana_to_pauli(m, n))
        assert abs(monomial_expectation(kern, m) - ed) < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_unbalanced_strings_vanish(n):
    gs = ground_state_of(n, 0.8)
    for letters in itertools.product("IXYZ", repeat=n):
        p = PauliString("".join(letters))
        m, _ = pauli_to_majorana(p)
        if not m.balanced:
            assert abs(pauli_expectation(gs, p)) < 1e-10


def test_counts():
    assert monomial_count(2) == 6
    assert monomial_count(12) == 2_704_156
    assert list(enumerate_balanced_monomials(1)) == [MajoranaMonomial(), MajoranaMonomial((1,), (1,))]
    for n in range(1, 13):
        assert monomial_count(n) == comb(2 * n, n)
    for n in range(1, 7):
        assert sum(1 for _ in enumerate_balanced_monomials(n)) == comb(2 * n, n)


def test_enumeration_order_and_slicing():
    full = list(enumerate_balanced_monomials(4))
    assert len(set(full)) == len(full)
    assert [monomial_index(m, 4) for m in full] == list(range(len(full)))
    parts = [list(enumerate_balanced_monomials(4, start=s, stop=s + 13)) for s in range(0, len(full), 13)]
    assert sum(parts, []) == full
    assert list(enumerate_balanced_monomials(4, k_max=1)) == full[:17]


def test_colex_rank():
    assert [colex_rank(s) for s in [(1, 2), (1, 3), (2, 3), (1, 4)]] == [0, 1, 2, 3]
