"""Brute-force verification in the full q**n dimensional space.

Everything here works with dense state vectors and explicit single-site
projections, independent of the symmetric-subspace shortcuts in
:mod:`picodes.kl`.  Site ``1`` is the most significant digit of the basis
index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .combinatorics import enumerate_compositions, multinomial
from .kl import CodewordTable, make_report

MAX_AMPLITUDES = 2**22


class ResourceLimitError(RuntimeError):
    """Raised when a dense state would exceed :data:`MAX_AMPLITUDES`."""


def _check_size(q: int, n: int):
    if q**n > MAX_AMPLITUDES:
        raise ResourceLimitError(f"{q}^{n} amplitudes exceeds the cap of {MAX_AMPLITUDES}")


@dataclass
class DenseState:
    q: int
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.q**self.n,):
            raise ValueError(f"expected {self.q ** self.n} amplitudes, got {self.amplitudes.shape}")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("amplitudes must be finite")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "DenseState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other):
        return DenseState(self.q, self.n, self.amplitudes + other.amplitudes)

    def scaled(self, c) -> "DenseState":
        return DenseState(self.q, self.n, c * self.amplitudes)


@dataclass(frozen=True)
class DeletionSpec:
    """Project the 1-based sites ``sites`` onto the basis string ``x``."""

    sites: tuple
    x: tuple

    def __post_init__(self):
        if len(self.sites) != len(self.x):
            raise ValueError("sites and x must have equal length")
        if any(b <= a for a, b in zip(self.sites, self.sites[1:])):
            raise ValueError(f"sites must be strictly increasing: {self.sites}")


@lru_cache(maxsize=16)
def _weights(n: int, q: int) -> np.ndarray:
    # (q**n, q) array of symbol counts per basis index
    _check_size(q, n)
    idx = np.arange(q**n)
    counts = np.zeros((q**n, q), dtype=np.int64)
    for _ in range(n):
        counts[np.arange(q**n), idx % q] += 1
        idx //= q
    return counts


def dicke_vector(n: int, q: int, lam: Sequence[int]) -> DenseState:
    lam = tuple(lam)
    if len(lam) != q or sum(lam) != n or min(lam) < 0:
        raise ValueError(f"{lam} is not a composition of {n} into {q} parts")
    w = _weights(n, q)
    mask = np.all(w == np.array(lam), axis=1)
    amps = np.zeros(q**n, dtype=complex)
    amps[mask] = 1.0 / np.sqrt(multinomial(n, lam))
    return DenseState(q, n, amps)


def apply_kraus(state: DenseState, spec: DeletionSpec) -> DenseState:
    """A_{I,x}: project each listed site onto <x_k| and drop it.

    Applied as successive single-site contractions, highest site first so
    the remaining site labels stay valid.
    """
    q, n = state.q, state.n
    if spec.sites and (spec.sites[0] < 1 or spec.sites[-1] > n):
        raise ValueError(f"sites {spec.sites} out of range for n={n}")
    if any(not 0 <= v < q for v in spec.x):
        raise ValueError(f"symbols {spec.x} out of range for q={q}")
    tensor = state.amplitudes.reshape((q,) * n) if n else state.amplitudes.reshape(())
    for site, sym in sorted(zip(spec.sites, spec.x), reverse=True):
        tensor = np.take(tensor, sym, axis=site - 1)
    m = n - len(spec.sites)
    return DenseState(q, m, np.asarray(tensor).reshape(q**m))


def apply_kraus_adjoint(state: DenseState, spec: DeletionSpec) -> DenseState:
    """A_{I,x}^dagger: insert |x_k> at the listed sites."""
    q = state.q
    n = state.n + len(spec.sites)
    tensor = state.amplitudes.reshape((q,) * state.n) if state.n else state.amplitudes.reshape(())
    for site, sym in sorted(zip(spec.sites, spec.x)):
        e = np.zeros(q)
        e[sym] = 1.0
        tensor = np.moveaxis(np.multiply.outer(e, tensor), 0, site - 1)
    return DenseState(q, n, np.asarray(tensor).reshape(q**n))


def deletion_error(state: DenseState, mu: Sequence[int]) -> DenseState:
    """E_mu: mu_k deletions of type k, applied type 0 first, always at site 1."""
    out = state
    for k, count in enumerate(mu):
        for _ in range(count):
            out = apply_kraus(out, DeletionSpec((1,), (k,)))
    return out


def codeword_states(table: CodewordTable) -> list:
    p = table.params
    _check_size(p.q_p, p.n)
    basis = [dicke_vector(p.n, p.q_p, lam).amplitudes for lam in enumerate_compositions(p.n, p.q_p)]
    B = np.array(basis)
    return [DenseState(p.q_p, p.n, row @ B) for row in table.coeffs]


def brute_pair_values(table: CodewordTable, sites: Sequence[int] | None = None):
    """<c_i| A_x^dag A_y |c_j> grouped by (w(x), w(y)).

    Returns ``(values, spread)`` where ``values[(mu, nu)]`` is a
    ``q_l x q_l`` matrix (mean over the group) and ``spread`` is the largest
    deviation seen inside any group.
    """
    p = table.params
    q, t = p.q_p, p.t
    sites = tuple(range(1, 2 * t + 1)) if sites is None else tuple(sorted(sites))
    if len(sites) != 2 * t:
        raise ValueError(f"need {2 * t} sites, got {len(sites)}")
    states = codeword_states(table)
    strings = list(product(range(q), repeat=2 * t))
    reduced = {}
    for x in strings:
        spec = DeletionSpec(sites, x)
        reduced[x] = np.array([apply_kraus(s, spec).amplitudes for s in states])
    groups: dict = {}
    for x in strings:
        mu = tuple(x.count(k) for k in range(q))
        for y in strings:
            nu = tuple(y.count(k) for k in range(q))
            groups.setdefault((mu, nu), []).append(np.conj(reduced[x]) @ reduced[y].T)
    values, spread = {}, 0.0
    for key, mats in groups.items():
        stack = np.array(mats)
        mean = stack.mean(axis=0)
        spread = max(spread, float(np.max(np.abs(stack - mean))))
        values[key] = mean
    return values, spread


def brute_kl_residuals(table: CodewordTable, sites: Sequence[int] | None = None):
    """KL residuals from explicit Kraus operators, in the kl-module layout."""
    p = table.params
    ql = p.q_l
    states = codeword_states(table)
    gram = np.array([[a.inner(b) for b in states] for a in states])
    c1 = gram - np.eye(ql)
    values, _ = brute_pair_values(table, sites)
    mus = enumerate_compositions(2 * p.t, p.q_p)
    c2, c3 = {}, {}
    for i in range(ql):
        for j in range(ql):
            for mu in mus:
                for nu in mus:
                    G = values[(mu, nu)]
                    if i < j:
                        c2[(i, j, mu, nu)] = complex(G[i, j])
                    elif i > j:
                        c3[(i, j, mu, nu)] = complex(G[i, i] - G[j, j])
    return make_report(c1, c2, c3)
