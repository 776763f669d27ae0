"""Knill-Laflamme residuals for permutation-invariant codes.

A code is stored as a :class:`CodewordTable`: one row per logical basis
state, one column per Dicke weight (canonical composition order).  The KL
conditions for ``2t`` deletions reduce to bilinear forms

    G[mu, nu, i, j] = sum_lam conj(a[i, lam]) a[j, lam - mu + nu] T(lam, mu, nu)

with ``T`` the transition coefficient.  C1 is the Gram matrix, C2 asks
``G[mu, nu, i, j] = 0`` for ``i != j`` and C3 asks ``G[mu, nu, i, i]`` to be
independent of ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .combinatorics import (
    composition_index,
    enumerate_compositions,
    num_compositions,
)


@dataclass(frozen=True)
class CodeParams:
    n: int
    q_p: int = 2
    q_l: int = 2
    t: int = 1

    def __post_init__(self):
        if self.t < 0 or self.n < 2 * self.t:
            raise ValueError(f"need n >= 2t >= 0, got n={self.n}, t={self.t}")
        if self.q_p < 2 or self.q_l < 2:
            raise ValueError(f"local dimensions must be >= 2, got q_p={self.q_p}, q_l={self.q_l}")

    @property
    def d(self) -> int:
        return 2 * self.t + 1

    @property
    def dim(self) -> int:
        return num_compositions(self.n, self.q_p)

    def with_t(self, t: int) -> "CodeParams":
        return CodeParams(self.n, self.q_p, self.q_l, t)


@dataclass
class CodewordTable:
    """Coefficients ``alpha[i, lam]`` of a PI code."""

    params: CodeParams
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        expected = (self.params.q_l, self.params.dim)
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {expected}")

    @property
    def compositions(self):
        return enumerate_compositions(self.params.n, self.params.q_p)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.coeffs, axis=1) - 1) <= tol))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= tol))

    def coefficient(self, i: int, lam) -> complex:
        return self.coeffs[i, composition_index(self.params.n, self.params.q_p)[tuple(lam)]]

    def with_t(self, t: int) -> "CodewordTable":
        return CodewordTable(self.params.with_t(t), self.coeffs)

    def copy(self) -> "CodewordTable":
        return CodewordTable(self.params, self.coeffs.copy())


@dataclass
class KLReport:
    c1: np.ndarray
    c2: dict
    c3: dict
    max_abs: float
    cost: float
    n_identities: int

    def summary(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "cost": self.cost,
            "n_identities": self.n_identities,
            "max_c1": float(np.max(np.abs(self.c1))) if self.c1.size else 0.0,
            "max_c2": max((abs(v) for v in self.c2.values()), default=0.0),
            "max_c3": max((abs(v) for v in self.c3.values()), default=0.0),
        }


class TransitionTensor:
    """Nonzero transition coefficients for fixed ``(n, q, t)``.

    Entries are kept as flat arrays: ``pair`` is ``mu_index * P + nu_index``
    with ``P`` the number of compositions of ``2t``; ``src`` and ``dst`` are
    the column indices of ``lam`` and ``lam - mu + nu``.
    """

    def __init__(self, n: int, q: int, t: int):
        if n < 2 * t:
            raise ValueError(f"need n >= 2t, got n={n}, t={t}")
        self.n, self.q, self.t = n, q, t
        self.lams = enumerate_compositions(n, q)
        self.mus = enumerate_compositions(2 * t, q)
        index = composition_index(n, q)
        lam_arr = np.array(self.lams, dtype=np.int64).reshape(len(self.lams), q)
        mu_arr = np.array(self.mus, dtype=np.int64).reshape(len(self.mus), q)
        log_full = gammaln(n + 1) - gammaln(lam_arr + 1).sum(axis=1)
        pairs, src, dst, vals = [], [], [], []
        P = len(self.mus)
        for a, mu in enumerate(mu_arr):
            diff = lam_arr - mu
            ok = np.all(diff >= 0, axis=1)
            lam_idx = np.nonzero(ok)[0]
            d = diff[ok]
            log_del = gammaln(n - 2 * t + 1) - gammaln(d + 1).sum(axis=1)
            for b, nu in enumerate(mu_arr):
                shifted = d + nu
                dst_idx = np.array([index[tuple(s)] for s in shifted.tolist()], dtype=np.int64)
                coeff = np.exp(log_del - 0.5 * (log_full[lam_idx] + log_full[dst_idx]))
                pairs.append(np.full(len(lam_idx), a * P + b, dtype=np.int64))
                src.append(lam_idx)
                dst.append(dst_idx)
                vals.append(coeff)
        self.pair = np.concatenate(pairs)
        self.src = np.concatenate(src)
        self.dst = np.concatenate(dst)
        self.values = np.concatenate(vals)
        self.n_pairs = P * P

    def __len__(self):
        return len(self.values)

    def value(self, lam, mu, nu) -> float:
        P = len(self.mus)
        mu_i = composition_index(2 * self.t, self.q)[tuple(mu)]
        nu_i = composition_index(2 * self.t, self.q)[tuple(nu)]
        lam_i = composition_index(self.n, self.q)[tuple(lam)]
        hit = np.nonzero((self.pair == mu_i * P + nu_i) & (self.src == lam_i))[0]
        return float(self.values[hit[0]]) if len(hit) else 0.0


@lru_cache(maxsize=64)
def transition_tensor(n: int, q: int, t: int) -> TransitionTensor:
    return TransitionTensor(n, q, t)


class KLSystem:
    """Residual vector and Wirtinger derivatives for fixed code parameters.

    Residual order: C1 for ``i <= j``, then C2 for ``i < j`` and every
    ``(mu, nu)``, then C3 for ``i > j`` and every ``(mu, nu)``.
    """

    def __init__(self, params: CodeParams):
        self.params = params
        n, q, ql, t = params.n, params.q_p, params.q_l, params.t
        self.tensor = transition_tensor(n, q, t)
        self.N = params.dim
        T = self.tensor
        P2 = T.n_pairs
        K = len(T)
        # group-sum operator: (P2 x K)
        self._S = sp.csr_matrix((np.ones(K), (T.pair, np.arange(K))), shape=(P2, K))
        self.c1_pairs = [(i, j) for i in range(ql) for j in range(i, ql)]
        self.c2_pairs = [(i, j) for i in range(ql) for j in range(i + 1, ql)]
        self.c3_pairs = [(i, j) for i in range(ql) for j in range(i)]
        self.n_c1 = len(self.c1_pairs)
        self.n_c2 = len(self.c2_pairs) * P2
        self.n_c3 = len(self.c3_pairs) * P2
        self.n_residuals = self.n_c1 + self.n_c2 + self.n_c3
        self._hol = self._anti = None  # built on first use by wirtinger()

    def _flat(self, i, cols):
        return i * self.N + cols

    def _build_jacobian_pattern(self):
        T = self.tensor
        N, P2 = self.N, T.n_pairs
        hol_rows, hol_cols, hol_src, hol_sign = [], [], [], []
        anti_rows, anti_cols, anti_src, anti_sign = [], [], [], []
        s = np.arange(N)
        for r, (i, j) in enumerate(self.c1_pairs):
            rows = np.full(N, r)
            hol_rows.append(rows); hol_cols.append(self._flat(j, s))
            hol_src.append(self._flat(i, s)); hol_sign.append(np.ones(N))
            anti_rows.append(rows); anti_cols.append(self._flat(i, s))
            anti_src.append(self._flat(j, s)); anti_sign.append(np.ones(N))
        # value recipes: hol value = sign * coef * conj(A[hol_src]); anti value = sign * coef * A[anti_src]
        hol_coef = [np.ones(N) for _ in self.c1_pairs]
        anti_coef = [np.ones(N) for _ in self.c1_pairs]
        base = self.n_c1
        for m, (i, j) in enumerate(self.c2_pairs):
            rows = base + m * P2 + T.pair
            hol_rows.append(rows); hol_cols.append(self._flat(j, T.dst))
            hol_src.append(self._flat(i, T.src)); hol_sign.append(np.ones(len(T)))
            hol_coef.append(T.values)
            anti_rows.append(rows); anti_cols.append(self._flat(i, T.src))
            anti_src.append(self._flat(j, T.dst)); anti_sign.append(np.ones(len(T)))
            anti_coef.append(T.values)
        base += self.n_c2
        for m, (i, j) in enumerate(self.c3_pairs):
            rows = base + m * P2 + T.pair
            for row_i, sign in ((i, 1.0), (j, -1.0)):
                hol_rows.append(rows); hol_cols.append(self._flat(row_i, T.dst))
                hol_src.append(self._flat(row_i, T.src)); hol_sign.append(np.full(len(T), sign))
                hol_coef.append(T.values)
                anti_rows.append(rows); anti_cols.append(self._flat(row_i, T.src))
                anti_src.append(self._flat(row_i, T.dst)); anti_sign.append(np.full(len(T), sign))
                anti_coef.append(T.values)
        shape = (self.n_residuals, self.params.q_l * N)
        self._hol = self._pattern(hol_rows, hol_cols, hol_src, hol_sign, hol_coef, shape)
        self._anti = self._pattern(anti_rows, anti_cols, anti_src, anti_sign, anti_coef, shape)

    @staticmethod
    def _pattern(rows, cols, src, sign, coef, shape):
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        src = np.concatenate(src)
        weight = np.concatenate(sign) * np.concatenate(coef)
        order = np.lexsort((cols, rows))
        rows, cols, src, weight = rows[order], cols[order], src[order], weight[order]
        indptr = np.searchsorted(rows, np.arange(shape[0] + 1))
        return indptr, cols, src, weight, shape

    # -- evaluation ---------------------------------------------------------

    def pair_values(self, A: np.ndarray) -> np.ndarray:
        """G as an array of shape (P*P, q_l, q_l)."""
        T = self.tensor
        ql = self.params.q_l
        X = np.conj(A[:, T.src]) * T.values
        Y = A[:, T.dst]
        W = (X[:, None, :] * Y[None, :, :]).reshape(ql * ql, -1)
        return np.asarray(self._S @ W.T).reshape(-1, ql, ql)

    def residuals(self, A: np.ndarray) -> np.ndarray:
        """Complex residual vector in the documented order."""
        A = np.asarray(A)
        gram = np.conj(A) @ A.T
        out = np.empty(self.n_residuals, dtype=np.result_type(A.dtype, np.float64))
        for r, (i, j) in enumerate(self.c1_pairs):
            out[r] = gram[i, j] - (1.0 if i == j else 0.0)
        G = self.pair_values(A)
        k = self.n_c1
        for i, j in self.c2_pairs:
            out[k:k + G.shape[0]] = G[:, i, j]
            k += G.shape[0]
        for i, j in self.c3_pairs:
            out[k:k + G.shape[0]] = G[:, i, i] - G[:, j, j]
            k += G.shape[0]
        return out

    def cost(self, A: np.ndarray) -> float:
        r = self.residuals(A)
        return float(np.vdot(r, r).real)

    def wirtinger(self, A: np.ndarray):
        """Sparse (dr/dA, dr/dconj(A)) w.r.t. the flattened table."""
        if self._hol is None:
            self._build_jacobian_pattern()
        flat = np.asarray(A).reshape(-1)
        out = []
        for (indptr, cols, src, weight, shape), conj in ((self._hol, True), (self._anti, False)):
            vals = flat[src]
            if conj:
                vals = np.conj(vals)
            out.append(sp.csr_matrix((weight * vals, cols, indptr), shape=shape))
        return out[0], out[1]

    def report(self, A: np.ndarray) -> KLReport:
        A = np.asarray(A, dtype=complex)
        ql = self.params.q_l
        gram = np.conj(A) @ A.T
        c1 = gram - np.eye(ql)
        G = self.pair_values(A)
        mus = self.tensor.mus
        P = len(mus)
        c2, c3 = {}, {}
        for i, j in self.c2_pairs:
            for p in range(P * P):
                c2[(i, j, mus[p // P], mus[p % P])] = complex(G[p, i, j])
        for i, j in self.c3_pairs:
            for p in range(P * P):
                c3[(i, j, mus[p // P], mus[p % P])] = complex(G[p, i, i] - G[p, j, j])
        return make_report(c1, c2, c3)


def make_report(c1: np.ndarray, c2: dict, c3: dict) -> KLReport:
    ql = c1.shape[0]
    upper = [c1[i, j] for i in range(ql) for j in range(i, ql)]
    vals = np.array(upper + list(c2.values()) + list(c3.values()), dtype=complex)
    cost = float(np.sum(np.abs(vals) ** 2))
    max_abs = float(np.max(np.abs(vals))) if vals.size else 0.0
    return KLReport(c1=c1, c2=c2, c3=c3, max_abs=max_abs, cost=cost, n_identities=len(vals))


@lru_cache(maxsize=64)
def kl_system(params: CodeParams) -> KLSystem:
    return KLSystem(params)


# above this many (composition, mu, nu) triples the dense tensor is skipped
DENSE_LIMIT = 4_000_000


def qudit_residuals(table: CodewordTable, method: str = "auto") -> KLReport:
    """All C1/C2/C3 residuals of ``table`` at its own weight ``t``.

    ``method`` is ``dense`` (precomputed transition tensor), ``support``
    (only compositions where the table is nonzero) or ``auto``.
    """
    if not isinstance(table, CodewordTable):
        raise TypeError("expected a CodewordTable")
    p = table.params
    if method == "auto":
        P = num_compositions(2 * p.t, p.q_p)
        method = "dense" if p.dim * P * P <= DENSE_LIMIT else "support"
    if method == "dense":
        return kl_system(p).report(table.coeffs)
    if method == "support":
        return support_residuals(table)
    raise ValueError(f"unknown method {method!r}")


def support_residuals(table: CodewordTable, zero_tol: float = 0.0) -> KLReport:
    """Same residuals as the dense route, summing only over the table's support."""
    p = table.params
    n, q, ql, t = p.n, p.q_p, p.q_l, p.t
    A = np.asarray(table.coeffs, dtype=complex)
    lams = enumerate_compositions(n, q)
    cols = np.flatnonzero(np.any(np.abs(A) > zero_tol, axis=0))
    sup = np.array([lams[c] for c in cols], dtype=np.int64).reshape(len(cols), q)
    pos = {tuple(lam): k for k, lam in enumerate(sup.tolist())}
    As = A[:, cols]
    log_full = gammaln(n + 1) - gammaln(sup + 1).sum(axis=1)
    mus = enumerate_compositions(2 * t, q)
    P = len(mus)
    G = np.zeros((P * P, ql, ql), dtype=complex)
    for a, mu in enumerate(mus):
        d = sup - np.array(mu, dtype=np.int64)
        ok = np.flatnonzero(np.all(d >= 0, axis=1))
        if ok.size == 0:
            continue
        log_del = gammaln(n - 2 * t + 1) - gammaln(d[ok] + 1).sum(axis=1)
        for b, nu in enumerate(mus):
            shifted = d[ok] + np.array(nu, dtype=np.int64)
            hit = [(k, pos.get(tuple(s))) for k, s in zip(ok.tolist(), shifted.tolist())]
            hit = [(k, m) for k, m in hit if m is not None]
            if not hit:
                continue
            src = np.array([h[0] for h in hit])
            dst = np.array([h[1] for h in hit])
            ld = log_del[np.searchsorted(ok, src)]
            coeff = np.exp(ld - 0.5 * (log_full[src] + log_full[dst]))
            G[a * P + b] = (np.conj(As[:, src]) * coeff) @ As[:, dst].T
    c1 = np.conj(A) @ A.T - np.eye(ql)
    c2, c3 = {}, {}
    for i in range(ql):
        for j in range(i + 1, ql):
            for k in range(P * P):
                c2[(i, j, mus[k // P], mus[k % P])] = complex(G[k, i, j])
    for i in range(ql):
        for j in range(i):
            for k in range(P * P):
                c3[(i, j, mus[k // P], mus[k % P])] = complex(G[k, i, i] - G[k, j, j])
    return make_report(c1, c2, c3)


def qubit_residuals(table: CodewordTable) -> KLReport:
    """Qubit-only evaluation written directly over the weight index ``j``.

    Independent of :class:`TransitionTensor`; labels use
    ``mu = (2t - a, a)`` and ``nu = (2t - b, b)`` so the report lines up
    with :func:`qudit_residuals`.
    """
    p = table.params
    if p.q_p != 2:
        raise ValueError(f"qubit_residuals needs q_p = 2, got {p.q_p}")
    n, t, ql = p.n, p.t, p.q_l
    A = table.coeffs
    c1 = np.conj(A) @ A.T - np.eye(ql)
    j = np.arange(n + 1)
    lg = gammaln(np.arange(n + 1) + 1.0)

    def log_binom(top, k):
        ok = (k >= 0) & (k <= top)
        out = np.full(k.shape, -np.inf)
        out[ok] = lg[top] - lg[k[ok]] - lg[top - k[ok]]
        return out

    coeff = {}
    for a in range(2 * t + 1):
        for b in range(2 * t + 1):
            shift = j - a + b
            valid = (j - a >= 0) & (j - a <= n - 2 * t) & (shift >= 0) & (shift <= n)
            bab = np.zeros(n + 1)
            jj = j[valid]
            bab[valid] = np.exp(
                log_binom(n - 2 * t, jj - a) - 0.5 * (log_binom(n, jj) + log_binom(n, jj - a + b))
            )
            coeff[(a, b)] = (bab, np.where(valid, shift, 0))
    c2, c3 = {}, {}
    for i in range(ql):
        for k in range(ql):
            if i == k:
                continue
            for (a, b), (bab, idx) in coeff.items():
                key = (i, k, (2 * t - a, a), (2 * t - b, b))
                if i < k:
                    c2[key] = complex(np.sum(bab * np.conj(A[i]) * A[k, idx]))
                else:
                    c3[key] = complex(np.sum(bab * (np.conj(A[i]) * A[i, idx] - np.conj(A[k]) * A[k, idx])))
    return make_report(c1, c2, c3)


def cost(table: CodewordTable) -> float:
    return qudit_residuals(table).cost


def identity_count(params: CodeParams) -> int:
    """Number of identities summed into the cost (2(2t+1)^2 + 3 for qubits)."""
    return kl_system(params).n_residuals


class DistanceResult(NamedTuple):
    t: int
    d: int
    max_abs: tuple


def verify_distance(table: CodewordTable, tol: float = 1e-10, max_t: int | None = None,
                    method: str = "auto") -> DistanceResult:
    """Largest ``t`` whose KL residuals all stay within ``tol``.

    Weights are tried in increasing order and the scan stops at the first
    failing weight.  ``t = -1`` means even orthonormality fails.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = table.params.n
    best = -1
    seen = []
    tt = 0
    while 2 * tt <= n and (max_t is None or tt <= max_t):
        rep = qudit_residuals(table.with_t(tt), method)
        seen.append(rep.max_abs)
        if rep.max_abs > tol:
            break
        best = tt
        tt += 1
    return DistanceResult(best, 2 * best + 1 if best >= 0 else 0, tuple(seen))
