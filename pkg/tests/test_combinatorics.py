import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from picodes.combinatorics import (
    composition_index,
    diagonal_ratio_exact,
    diagonal_ratio_log,
    enumerate_compositions,
    index_of,
    multinomial,
    num_compositions,
    transition_coeff,
)


def pascal_multinomial(n, lam):
    # independent route: multinomial recursion on the last nonzero part
    lam = tuple(lam)
    if any(v < 0 for v in lam):
        return 0
    if n == 0:
        return 1
    return sum(pascal_multinomial(n - 1, lam[:k] + (lam[k] - 1,) + lam[k + 1:]) for k in range(len(lam)) if lam[k])


def test_small_orders():
    assert enumerate_compositions(2, 2) == ((2, 0), (1, 1), (0, 2))
    assert enumerate_compositions(0, 3) == ((0, 0, 0),)


def test_count_6_9():
    comps = enumerate_compositions(6, 9)
    assert len(comps) == 3003 == math.comb(14, 8)
    assert len(set(comps)) == 3003


def test_qubit_index_is_second_part():
    for n in range(10):
        for j, lam in enumerate(enumerate_compositions(n, 2)):
            assert lam[1] == j


def test_suffix_lex_order():
    for n, q in [(4, 3), (3, 4), (5, 2)]:
        suffixes = [lam[1:] for lam in enumerate_compositions(n, q)]
        assert suffixes == sorted(suffixes)


@pytest.mark.parametrize("n", range(13))
def test_index_round_trip(n):
    for q in range(1, 6):
        comps = enumerate_compositions(n, q)
        assert len(comps) == num_compositions(n, q)
        idx = composition_index(n, q)
        for k, lam in enumerate(comps):
            assert idx[lam] == k
            assert index_of(lam) == k


def test_multinomial_examples():
    assert multinomial(5, (5, 0, 0)) == 1
    assert multinomial(7, (3, 4)) == 35 == pascal_multinomial(7, (3, 4))
    strings = [s for s in itertools.product(range(3), repeat=4) if tuple(s.count(k) for k in range(3)) == (2, 1, 1)]
    assert multinomial(4, (2, 1, 1)) == len(strings) == 12


def test_multinomial_errors():
    with pytest.raises(ValueError):
        multinomial(5, (2, 2))
    with pytest.raises(ValueError):
        multinomial(2, (3, -1))


@pytest.mark.parametrize("n,q", [(n, q) for n in range(11) for q in range(1, 5)])
def test_multinomial_sum(n, q):
    assert sum(multinomial(n, lam) for lam in enumerate_compositions(n, q)) == q**n


@given(st.integers(0, 9), st.integers(1, 4), st.data())
def test_multinomial_matches_recursion(n, q, data):
    lam = data.draw(st.sampled_from(enumerate_compositions(n, q)))
    assert multinomial(n, lam) == pascal_multinomial(n, lam)


def test_transition_examples():
    assert transition_coeff(7, 1, (4, 3), (0, 2), (2, 0)) == pytest.approx(math.sqrt(5) / 7, rel=1e-14)
    assert transition_coeff(7, 1, (4, 3), (0, 2), (2, 0)) == pytest.approx(5 / math.sqrt(35 * 7), rel=1e-14)
    for nu in [(2, 0), (1, 1), (0, 2)]:
        assert transition_coeff(7, 1, (7, 0), (0, 2), nu) == 0.0
    for lam in enumerate_compositions(6, 3):
        assert transition_coeff(6, 0, lam, (0, 0, 0), (0, 0, 0)) == pytest.approx(1.0, rel=1e-14)


def test_transition_length_mismatch():
    with pytest.raises(ValueError):
        transition_coeff(7, 1, (4, 3), (0, 1, 1), (2, 0))


@st.composite
def triples(draw):
    q = draw(st.integers(2, 4))
    t = draw(st.integers(0, 2))
    n = draw(st.integers(2 * t, 14))
    lam = draw(st.sampled_from(enumerate_compositions(n, q)))
    mus = enumerate_compositions(2 * t, q)
    return n, t, lam, draw(st.sampled_from(mus)), draw(st.sampled_from(mus))


@given(triples())
def test_transition_in_unit_interval_and_symmetric(tr):
    n, t, lam, mu, nu = tr
    v = transition_coeff(n, t, lam, mu, nu)
    assert 0.0 <= v <= 1.0 + 1e-12
    if all(a >= b for a, b in zip(lam, mu)):
        lam2 = tuple(a - b + c for a, b, c in zip(lam, mu, nu))
        assert transition_coeff(n, t, lam2, nu, mu) == pytest.approx(v, rel=1e-12, abs=1e-300)
    else:
        assert v == 0.0


@given(triples())
def test_transition_matches_exact(tr):
    n, t, lam, mu, nu = tr
    v = transition_coeff(n, t, lam, mu, nu)
    d = [a - b for a, b in zip(lam, mu)]
    if min(d) < 0:
        return
    lam2 = [a + c for a, c in zip(d, nu)]
    exact_sq = Fraction(multinomial(n - 2 * t, d) ** 2, multinomial(n, lam) * multinomial(n, lam2))
    assert v * v == pytest.approx(float(exact_sq), rel=1e-12)


@given(st.integers(2, 60), st.integers(2, 4), st.integers(0, 3), st.data())
def test_log_vs_exact_ratio(n, q, t, data):
    if n < 2 * t:
        return
    lam = data.draw(st.sampled_from(enumerate_compositions(n, q)) if num_compositions(n, q) < 2000 else
                    st.lists(st.integers(0, n), min_size=q - 1, max_size=q - 1).filter(lambda v: sum(v) <= n)
                    .map(lambda v: (n - sum(v),) + tuple(v)))
    mu = data.draw(st.sampled_from(enumerate_compositions(2 * t, q)))
    exact = diagonal_ratio_exact(n, t, lam, mu)
    approx = diagonal_ratio_log(n, t, lam, mu)
    if exact == 0:
        assert approx == 0.0
    else:
        assert approx == pytest.approx(float(exact), rel=1e-12)
