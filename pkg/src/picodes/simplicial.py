"""Simplicial qudit PI codes.

A region R of integer vectors ``l = (l_0, ..., l_{q-2})`` (all entries
congruent mod q) is turned into codewords supported on the compositions
``lambda^{g l j}`` obtained by inserting the bulk entry ``n - g sum(l)`` at
vertex position ``j``.  The squared amplitudes ``|f(l)|^2`` solve an exact
linear feasibility problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .combinatorics import composition_index, enumerate_compositions, multinomial, multinomial_or_zero
from .kl import CodeParams, CodewordTable
from .lp import LPResult, check_solution, solve_feasibility


@dataclass(frozen=True)
class RegionSpec:
    """Region shape.  ``l_max`` may be an int or an exact rational; the region
    is the set of lattice points inside the (possibly non-integral) polytope."""

    q: int
    b: int
    l_max: int | Fraction

    def __post_init__(self):
        object.__setattr__(self, "l_max", Fraction(self.l_max))
        if self.q < 3:
            raise ValueError(f"simplicial regions need q >= 3, got {self.q}")
        if self.b < 1 or self.l_max <= 0:
            raise ValueError("b and l_max must be positive")
        if not (self.b <= self.q * self.l_max and 2 * self.l_max <= self.b):
            raise ValueError(f"l_max={self.l_max} outside [b/q, b/2] for b={self.b}, q={self.q}")


@dataclass(frozen=True)
class LVector:
    entries: tuple
    residue: int

    @classmethod
    def of(cls, entries, q: int) -> "LVector":
        entries = tuple(int(v) for v in entries)
        r = entries[0] % q
        if any(v % q != r for v in entries):
            raise ValueError(f"{entries} is not entrywise congruent mod {q}")
        return cls(entries, r)


def enumerate_region(spec: RegionSpec) -> dict:
    """Region vectors grouped by residue class, each list sorted."""
    q, b = spec.q, spec.b
    cap = math.floor(spec.l_max)
    budget = math.floor(b - spec.l_max)  # bound on sum(l)
    D = q - 1
    out = {}
    for r in range(q):
        values = range(r, cap + 1, q)
        vecs = []

        def rec(prefix, total):
            if len(prefix) == D:
                vecs.append(LVector(tuple(prefix), r))
                return
            for v in values:
                if total + v > budget:
                    break
                rec(prefix + [v], total + v)

        rec([], 0)
        out[r] = vecs
    _check_pairwise(spec, [v for vs in out.values() for v in vs])
    return out


def _check_pairwise(spec: RegionSpec, vecs):
    # for all l, l' in R and every k: sum(l) + l'_k <= b
    if not vecs:
        return
    arr = np.array([v.entries for v in vecs], dtype=np.int64)
    sums = arr.sum(axis=1)
    worst = sums[:, None, None] + arr[None, :, :]
    if np.any(worst > spec.b):
        raise AssertionError(f"region for {spec} violates the pairwise support constraint")


def region_vectors(spec: RegionSpec) -> list:
    groups = enumerate_region(spec)
    return [v for r in range(spec.q) for v in groups[r]]


def composition_of(l: Sequence[int], j: int, g: int, n: int) -> tuple:
    """Insert the bulk entry ``n - g sum(l)`` at position ``j``."""
    entries = l.entries if isinstance(l, LVector) else tuple(l)
    bulk = n - g * sum(entries)
    if bulk < 0:
        raise ValueError(f"negative bulk entry for l={entries}, g={g}, n={n}")
    scaled = [g * v for v in entries]
    if not 0 <= j <= len(scaled):
        raise ValueError(f"vertex index {j} out of range")
    return tuple(scaled[:j] + [bulk] + scaled[j:])


@dataclass
class SimplicialLP:
    t: int
    q_l: int
    spec: RegionSpec
    g: int
    delta: int
    n: int
    variables: list
    rows: list  # list of lists of Fraction (equality rows, then normalization)
    rhs: list
    labels: list  # (mu, i, j) per equality row, "norm" for the last


def block_length(t: int, b: int, g: int | None = None, delta: int | None = None) -> int:
    g = 2 * t if g is None else g
    delta = 2 * t if delta is None else delta
    return g * b + delta + 1


def assemble_lp(t: int, q_l: int, spec: RegionSpec, g: int | None = None, delta: int | None = None) -> SimplicialLP:
    q = spec.q
    if q_l > q:
        raise ValueError(f"need q_l <= q, got q_l={q_l}, q={q}")
    g = 2 * t if g is None else g
    delta = 2 * t if delta is None else delta
    n = block_length(t, spec.b, g, delta)
    variables = region_vectors(spec)
    mus = enumerate_compositions(2 * t, q)
    pairs = [(i, j) for i in range(q_l) for j in range(i)]
    # per variable: base multinomial and the deletion multinomials per vertex
    denom = []
    deleted = []
    for l in variables:
        lam_r = composition_of(l, l.residue, g, n)
        denom.append(multinomial(n, lam_r))
        deleted.append([composition_of(l, v, g, n) for v in range(q)])
    rows, labels = [], []
    for mu in mus:
        for i, j in pairs:
            row = []
            for l, den, lams in zip(variables, denom, deleted):
                li = lams[(l.residue - i) % q]
                lj = lams[(l.residue - j) % q]
                num = multinomial_or_zero(n - 2 * t, [a - c for a, c in zip(li, mu)]) - multinomial_or_zero(
                    n - 2 * t, [a - c for a, c in zip(lj, mu)]
                )
                row.append(Fraction(num, den))
            rows.append(row)
            labels.append((mu, i, j))
    rows.append([Fraction(1)] * len(variables))
    labels.append("norm")
    rhs = [Fraction(0)] * (len(rows) - 1) + [Fraction(1)]
    return SimplicialLP(t, q_l, spec, g, delta, n, variables, rows, rhs, labels)


@dataclass
class SimplicialSolution:
    spec: RegionSpec
    t: int
    q_l: int
    g: int
    delta: int
    n: int
    f_sq: dict = field(default_factory=dict)  # LVector -> Fraction

    def __post_init__(self):
        if sum(self.f_sq.values(), Fraction(0)) != 1:
            raise ValueError("squared amplitudes must sum to exactly 1")
        if any(v < 0 for v in self.f_sq.values()):
            raise ValueError("squared amplitudes must be nonnegative")


def solve_feasibility_lp(lp: SimplicialLP) -> LPResult:
    return solve_feasibility(lp.rows, lp.rhs)


def solve_region(t: int, q_l: int, spec: RegionSpec, g=None, delta=None):
    """Assemble and solve; returns ``(SimplicialSolution | None, LPResult)``."""
    lp = assemble_lp(t, q_l, spec, g, delta)
    res = solve_feasibility_lp(lp)
    if not res.feasible:
        return None, res
    if not check_solution(lp.rows, lp.rhs, res.x):
        raise AssertionError("simplex returned a point violating the constraints")
    f_sq = {l: v for l, v in zip(lp.variables, res.x) if v != 0}
    return SimplicialSolution(spec, t, q_l, lp.g, lp.delta, lp.n, f_sq), res


def round_half_up(x: Fraction) -> int:
    return math.floor(Fraction(x) + Fraction(1, 2))


LMAX_MODES = ("exact", "round")


def lmax_for(ratio: Fraction, b: int, q: int, mode: str = "exact"):
    """l_max for a given shape ratio.

    ``exact`` keeps ``ratio * b`` as a rational; ``round`` rounds half-up to an
    integer clipped into [b/q, b/2] (None if no integer fits).
    """
    ratio = Fraction(ratio)
    if mode == "exact":
        return ratio * b
    if mode != "round":
        raise ValueError(f"unknown l_max mode {mode!r}")
    lo = -(-b // q)
    hi = b // 2
    if lo > hi:
        return None
    return min(max(round_half_up(ratio * b), lo), hi)


@dataclass
class MinBResult:
    solution: SimplicialSolution
    tried: list  # (b, l_max, feasible)


def min_b_search(t: int, q: int, q_l: int, ratio=Fraction(3, 7), b_start: int | None = None,
                 b_max: int = 500, mode: str = "exact") -> MinBResult:
    """Smallest b (scanning upward) whose LP is feasible."""
    ratio = Fraction(ratio)
    if not Fraction(1, q) <= ratio <= Fraction(1, 2):
        raise ValueError(f"ratio {ratio} outside [1/{q}, 1/2]")
    b = max(2 * t, 2) if b_start is None else b_start
    tried = []
    while b <= b_max:
        lm = lmax_for(ratio, b, q, mode)
        if lm is not None:
            sol, _ = solve_region(t, q_l, RegionSpec(q, b, lm))
            tried.append((b, lm, sol is not None))
            if sol is not None:
                return MinBResult(sol, tried)
        b += 1
    raise RuntimeError(f"no feasible b up to {b_max}")


def emit_codewords(sol: SimplicialSolution, q_l: int | None = None) -> CodewordTable:
    q = sol.spec.q
    q_l = sol.q_l if q_l is None else q_l
    if q_l > q:
        raise ValueError("q_l must not exceed q")
    params = CodeParams(sol.n, q, q_l, sol.t)
    index = composition_index(sol.n, q)
    A = np.zeros((q_l, params.dim), dtype=complex)
    omega = np.exp(2j * np.pi / q)
    for l, fsq in sol.f_sq.items():
        f = math.sqrt(fsq)
        for i in range(q_l):
            j = (l.residue - i) % q
            A[i, index[composition_of(l, j, sol.g, sol.n)]] += omega ** (i * j) * f
    return CodewordTable(params, A)


def volume(D: int, b: float, l_max: float) -> float:
    """Volume of the cube [0, l_max]^D cut by sum(l) <= b - l_max."""
    if D < 1 or not 0 < l_max <= b:
        raise ValueError("need D >= 1 and 0 < l_max <= b")
    r = b / l_max - 1
    total = 0.0
    for w in range(0, min(int(math.floor(r + 1e-12)), D) + 1):
        base = b - (1 + w) * l_max
        if base <= 0:
            continue
        total += (-1) ** w * math.comb(D, w) * base**D
    return total / math.factorial(D)


def _piece_polynomial(D: int, w_max: int):
    # V(x) for b = 1, x = l_max / b, valid while floor(1/x - 1) == w_max
    P = np.polynomial.Polynomial
    out = P([0.0])
    for w in range(min(w_max, D) + 1):
        out = out + (-1) ** w * math.comb(D, w) * P([1.0, -(1.0 + w)]) ** D
    return out / math.factorial(D)


def optimal_lmax(D: int) -> float:
    """Ratio l_max / b in [1/(D+1), 1/2] that maximizes the region volume."""
    if D < 2:
        raise ValueError("need D >= 2")
    q = D + 1
    candidates = []
    # breakpoints at x = 1/k, k = 2..q; on (1/(k+1), 1/k] floor(1/x - 1) = k - 1
    for k in range(2, q):
        lo, hi = 1.0 / (k + 1), 1.0 / k
        poly = _piece_polynomial(D, k - 1)
        pts = [lo, hi]
        for root in poly.deriv().roots():
            if abs(root.imag) < 1e-12 and lo <= root.real <= hi:
                pts.append(root.real)
        candidates += [(volume(D, 1.0, x), x) for x in pts]
    return max(candidates)[1]


def interpolate(points: Sequence[tuple]) -> list:
    """Exact coefficients (constant term first) of the lowest-degree polynomial
    through integer points ``(t, value)``."""
    xs = [Fraction(x) for x, _ in points]
    if len(set(xs)) != len(xs) or not xs:
        raise ValueError("need distinct abscissae")
    coef = [Fraction(0)] * len(xs)
    for k, (xk, (_, yk)) in enumerate(zip(xs, points)):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for m, xm in enumerate(xs):
            if m == k:
                continue
            basis = [Fraction(0)] + basis
            for i in range(len(basis) - 1):
                basis[i] -= xm * basis[i + 1]
            denom *= xk - xm
        for i, c in enumerate(basis):
            coef[i] += Fraction(yk) * c / denom
    while len(coef) > 1 and coef[-1] == 0:
        coef.pop()
    return coef
