import numpy as np
import pytest
from hypothesis import given, strategies as st

from picodes.families import aab_code, analytic_7qubit, AABParams
from picodes.kl import (
    CodeParams,
    CodewordTable,
    cost,
    identity_count,
    kl_system,
    qubit_residuals,
    qudit_residuals,
    support_residuals,
    verify_distance,
)


def random_table(rng, n, q_p, q_l, t, real=False):
    p = CodeParams(n, q_p, q_l, t)
    A = rng.standard_normal((q_l, p.dim))
    if not real:
        A = A + 1j * rng.standard_normal((q_l, p.dim))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    return CodewordTable(p, A)


def test_params_validation():
    with pytest.raises(ValueError):
        CodeParams(3, 2, 2, 2)
    with pytest.raises(ValueError):
        CodeParams(5, 1, 2, 1)
    with pytest.raises(ValueError):
        CodewordTable(CodeParams(7, 2, 2, 1), np.zeros((2, 7)))


def test_analytic_code_cost():
    rep = qudit_residuals(analytic_7qubit())
    assert rep.cost < 1e-24
    assert verify_distance(analytic_7qubit(), 1e-10).t == 1
    assert verify_distance(analytic_7qubit(), 1e-10).d == 3


def test_identical_rows():
    p = CodeParams(5, 2, 2, 1)
    v = np.zeros(p.dim); v[0] = 1
    rep = qudit_residuals(CodewordTable(p, np.array([v, v])))
    assert abs(rep.c1[0, 1]) == pytest.approx(1.0)


def test_zero_table_cost():
    p = CodeParams(7, 2, 2, 1)
    tab = CodewordTable(p, np.zeros((2, p.dim)))
    assert cost(tab) == pytest.approx(2.0)  # two norm deviations of 1, zero overlap
    # every entry of the upper Gram triangle is counted once
    assert qudit_residuals(tab).c1[0, 0] == -1


def test_identity_counts():
    assert identity_count(CodeParams(7, 2, 2, 1)) == 21
    for t in range(4):
        p = CodeParams(4 * t + 3, 2, 2, t)
        assert identity_count(p) == 2 * (2 * t + 1) ** 2 + 3
        assert qudit_residuals(CodewordTable(p, np.eye(2, p.dim))).n_identities == identity_count(p)


def test_cost_matches_report():
    rng = np.random.default_rng(3)
    tab = random_table(rng, 6, 3, 2, 1)
    assert cost(tab) == qudit_residuals(tab).cost


def test_aab_qubit_residuals():
    assert qubit_residuals(aab_code(AABParams.default(1))).max_abs < 1e-12


def test_qubit_residuals_rejects_qudits():
    with pytest.raises(ValueError):
        qubit_residuals(random_table(np.random.default_rng(0), 4, 3, 2, 1))


def test_t0_orthonormal_pair_passes():
    p = CodeParams(7, 2, 2, 0)
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((p.dim, 2)))
    rep = qudit_residuals(CodewordTable(p, Q.T))
    assert rep.max_abs < 1e-12


def test_perturbation_breaks_code():
    tab = analytic_7qubit()
    A = tab.coeffs.copy(); A[0, 3] += 1e-3
    assert cost(CodewordTable(tab.params, A)) > 0


def test_verify_distance_examples():
    assert verify_distance(aab_code(AABParams.default(2)), 1e-10).t == 2
    rng = np.random.default_rng(11)
    assert verify_distance(random_table(rng, 7, 2, 2, 1), 1e-10).t == -1
    p = CodeParams(7, 2, 2, 1)
    Q, _ = np.linalg.qr(rng.standard_normal((p.dim, 2)))
    assert verify_distance(CodewordTable(p, Q.T), 1e-10).t == 0


@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.integers(2, 14))
def test_qubit_specialization(seed, t, extra):
    n = 2 * t + extra
    tab = random_table(np.random.default_rng(seed), n, 2, 2, t)
    a, b = qudit_residuals(tab), qubit_residuals(tab)
    assert set(a.c2) == set(b.c2) and set(a.c3) == set(b.c3)
    for k in a.c2:
        assert abs(a.c2[k] - b.c2[k]) < 1e-14
    for k in a.c3:
        assert abs(a.c3[k] - b.c3[k]) < 1e-14
    assert np.max(np.abs(a.c1 - b.c1)) < 1e-14


@st.composite
def tables(draw):
    q_p = draw(st.integers(2, 4))
    q_l = draw(st.integers(2, 3))
    t = draw(st.integers(0, 2))
    n = draw(st.integers(max(2 * t, 1), 2 * t + 5))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_table(np.random.default_rng(seed), n, q_p, q_l, t)


@given(tables(), st.data())
def test_row_permutation_and_phase_invariance(tab, data):
    base = qudit_residuals(tab).cost
    perm = data.draw(st.permutations(range(tab.params.q_l)))
    assert qudit_residuals(CodewordTable(tab.params, tab.coeffs[list(perm)])).cost == pytest.approx(base, rel=1e-12)
    phases = np.exp(1j * np.array(data.draw(st.lists(st.floats(0, 6.3), min_size=tab.params.q_l,
                                                          max_size=tab.params.q_l))))
    rotated = CodewordTable(tab.params, tab.coeffs * phases[:, None])
    assert abs(qudit_residuals(rotated).cost - base) < 1e-14 * max(1.0, base) * 10


def test_row_sign_keeps_solutions():
    tab = analytic_7qubit()
    for r in range(2):
        A = tab.coeffs.copy(); A[r] *= -1
        assert cost(CodewordTable(tab.params, A)) < 1e-24


@given(tables())
def test_support_route_matches_dense(tab):
    A = tab.coeffs.copy()
    A[:, ::3] = 0
    tab = CodewordTable(tab.params, A)
    a, b = qudit_residuals(tab, "dense"), support_residuals(tab)
    for k in a.c2:
        assert abs(a.c2[k] - b.c2[k]) < 1e-12
    for k in a.c3:
        assert abs(a.c3[k] - b.c3[k]) < 1e-12


def test_gradient_structure_residual_order():
    p = CodeParams(5, 3, 3, 1)
    sys_ = kl_system(p)
    assert sys_.n_residuals == sys_.n_c1 + sys_.n_c2 + sys_.n_c3
    assert sys_.n_c1 == 6
