import math
from fractions import Fraction

import numpy as np
import pytest

from picodes.families import (
    AABParams,
    aab_code,
    aab_f_squared,
    analytic_7qubit,
    generalized_binomial,
    pad,
    reference_block_lengths,
)
from picodes.kl import CodeParams, CodewordTable, cost, qudit_residuals, verify_distance
from picodes.optimizer import symmetry_check


def test_generalized_binomial():
    assert generalized_binomial(Fraction(7, 4), 1) == Fraction(7, 4)
    assert generalized_binomial(Fraction(5, 2), 2) == Fraction(5, 2) * Fraction(3, 2) / 2
    for n in range(8):
        for k in range(n + 1):
            assert generalized_binomial(n, k) == math.comb(n, k)


def test_aab_t1():
    p = AABParams.default(1)
    assert (p.m, p.g, p.delta, p.eps, p.n) == (1, 2, 2, -1, 7)
    assert aab_f_squared(p) == [Fraction(3, 10), Fraction(7, 10)]
    A = aab_code(p).coeffs
    assert set(np.flatnonzero(np.abs(A[0]) > 0)) == {0, 5}
    assert set(np.flatnonzero(np.abs(A[1]) > 0)) == {2, 7}


@pytest.mark.parametrize("t,n", [(1, 7), (2, 21), (3, 43), (4, 73)])
def test_aab_distance(t, n):
    tab = aab_code(AABParams.default(t))
    assert tab.params.n == n == (2 * t + 1) ** 2 - (2 * t + 1) + 1
    assert np.allclose(np.linalg.norm(tab.coeffs, axis=1), 1, atol=1e-12)
    res = verify_distance(tab, 1e-10)
    assert res.t == t


@pytest.mark.parametrize("t", range(1, 6))
def test_aab_normalization_exact(t):
    assert sum(aab_f_squared(AABParams.default(t))) == 1


@pytest.mark.parametrize("t", range(1, 4))
def test_aab_symmetric(t):
    rep = symmetry_check(aab_code(AABParams.default(t)))
    assert rep.mirror and rep.phase_flip


def test_aab_invalid():
    with pytest.raises(ValueError):
        AABParams(t=1, m=1, g=1, delta=2, eps=-1)
    with pytest.raises(ValueError):
        AABParams(t=1, m=1, g=2, delta=2, eps=1)


def test_analytic_code():
    tab = analytic_7qubit()
    assert np.allclose(np.linalg.norm(tab.coeffs, axis=1) ** 2, (15 + 35 + 35 + 15) / 100)
    assert cost(tab) < 1e-24
    rep = symmetry_check(tab)
    assert rep.mirror and rep.phase_flip


def test_pad_examples():
    tab = analytic_7qubit()
    padded = pad(tab, 3)
    assert qudit_residuals(padded).max_abs < 1e-12
    assert np.array_equal(pad(tab, 2).coeffs, tab.coeffs)
    assert verify_distance(pad(aab_code(AABParams.default(1)), 4), 1e-10).t == 1
    with pytest.raises(ValueError):
        pad(padded, 2)


@pytest.mark.parametrize("qp", [3, 4])
def test_pad_preserves_cost(qp):
    rng = np.random.default_rng(qp)
    p = CodeParams(6, 2, 2, 1)
    tab = CodewordTable(p, rng.standard_normal((2, p.dim)))
    assert cost(pad(tab, qp)) == pytest.approx(cost(tab), abs=1e-14, rel=1e-13)


def test_reference_lengths():
    assert reference_block_lengths(1, 2) == {"singleton": 5, "ouyang": 9, "aab": 7, "conjectured_min": 7}
    assert reference_block_lengths(5)["conjectured_min"] == 91
    assert reference_block_lengths(0)["singleton"] == 1
