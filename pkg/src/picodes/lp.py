"""Exact-rational phase-1 simplex for feasibility of ``A x = b, x >= 0``.

All arithmetic is done with :class:`fractions.Fraction`, and pivoting follows
Bland's smallest-index rule, so the method terminates and an infeasibility
verdict is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


@dataclass
class LPResult:
    feasible: bool
    x: list | None
    pivots: int
    residual: Fraction  # optimal phase-1 objective; zero iff feasible


def solve_feasibility(A: Sequence[Sequence], b: Sequence) -> LPResult:
    """Find ``x >= 0`` with ``A x = b`` or prove that none exists."""
    m = len(A)
    nvar = len(A[0]) if m else 0
    rows = []
    rhs = []
    for row, bi in zip(A, b):
        row = [Fraction(v) for v in row]
        bi = Fraction(bi)
        if len(row) != nvar:
            raise ValueError("ragged constraint matrix")
        if bi < 0:
            row = [-v for v in row]
            bi = -bi
        rows.append(row)
        rhs.append(bi)
    # tableau columns: original variables, then one artificial per row
    total = nvar + m
    T = [row + [Fraction(int(i == k)) for k in range(m)] for i, row in enumerate(rows)]
    basis = [nvar + i for i in range(m)]
    # reduced costs for min sum(artificials): c_j - c_B B^-1 A_j
    cost = [Fraction(0)] * total
    for i in range(m):
        for j in range(nvar):
            cost[j] -= T[i][j]
    pivots = 0
    while True:
        entering = next((j for j in range(total) if cost[j] < 0), None)
        if entering is None:
            break
        leave, best = None, None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:  # cannot happen for a bounded phase-1 problem
            raise RuntimeError("phase-1 problem reported unbounded")
        _pivot(T, rhs, cost, leave, entering)
        basis[leave] = entering
        pivots += 1
    residual = sum((rhs[i] for i in range(m) if basis[i] >= nvar), Fraction(0))
    if residual != 0:
        return LPResult(False, None, pivots, residual)
    x = [Fraction(0)] * nvar
    for i, var in enumerate(basis):
        if var < nvar:
            x[var] = rhs[i]
    return LPResult(True, x, pivots, Fraction(0))


def _pivot(T, rhs, cost, r, c):
    piv = T[r][c]
    row = T[r]
    if piv != 1:
        inv = 1 / piv
        T[r] = row = [v * inv for v in row]
        rhs[r] *= inv
    nz = [j for j, v in enumerate(row) if v != 0]
    for i in range(len(T)):
        if i == r:
            continue
        f = T[i][c]
        if f != 0:
            Ti = T[i]
            for j in nz:
                Ti[j] -= f * row[j]
            rhs[i] -= f * rhs[r]
    f = cost[c]
    if f != 0:
        for j in nz:
            cost[j] -= f * row[j]


def check_solution(A, b, x) -> bool:
    """Exact verification that ``x >= 0`` and ``A x = b``."""
    if any(v < 0 for v in x):
        return False
    return all(sum(Fraction(a) * v for a, v in zip(row, x)) == Fraction(bi) for row, bi in zip(A, b))
