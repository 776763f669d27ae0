"""Analytic PI codes used as ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .combinatorics import composition_index, enumerate_compositions
from .kl import CodeParams, CodewordTable


def generalized_binomial(x, k: int) -> Fraction:
    """Falling-factorial binomial x (x-1) ... (x-k+1) / k! for rational x."""
    if k < 0:
        return Fraction(0)
    x = Fraction(x)
    out = Fraction(1)
    for i in range(k):
        out *= x - i
    return out / math.factorial(k)


@dataclass(frozen=True)
class AABParams:
    t: int
    m: int
    g: int
    delta: int
    eps: int = -1

    def __post_init__(self):
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if self.t < 0 or self.m < self.t or self.g < 1:
            raise ValueError(f"need 0 <= t <= m and g >= 1: {self}")
        if 2 * self.m * self.g >= self.n:
            raise ValueError(f"need 2m < n/g: {self}")
        if self.delta < 2 * self.t:
            raise ValueError(f"need delta >= 2t: {self}")
        need_g = 2 * self.t if self.eps == -1 else 2 * self.t + 1
        if self.g < need_g:
            raise ValueError(f"need g >= {need_g} for eps={self.eps}: {self}")

    @property
    def n(self) -> int:
        return 2 * self.g * self.m + self.delta + 1

    @classmethod
    def default(cls, t: int) -> "AABParams":
        """Smallest member for weight ``t``: n = 4t^2 + 2t + 1."""
        if t < 1:
            raise ValueError("the default AAB member needs t >= 1")
        return cls(t=t, m=t, g=2 * t, delta=2 * t, eps=-1)


def aab_f_squared(p: AABParams) -> list:
    """Exact squared amplitudes f(l)^2 for l = 0..m."""
    n, g, m = p.n, p.g, p.m
    pref = generalized_binomial(Fraction(n, 2 * g), m) * Fraction(n - 2 * g * m, g * (m + 1))
    return [
        pref * math.comb(m, l) / generalized_binomial(Fraction(n, g) - l, m + 1)
        for l in range(m + 1)
    ]


def aab_code(p: AABParams) -> CodewordTable:
    n, g = p.n, p.g
    f = [math.sqrt(v) for v in aab_f_squared(p)]
    A = np.zeros((2, n + 1))
    for l, fl in enumerate(f):
        if l % 2 == 0:
            A[0, g * l] += fl
            A[1, n - g * l] += p.eps * fl
        else:
            A[0, n - g * l] += fl
            A[1, g * l] += fl
    return CodewordTable(CodeParams(n, 2, 2, p.t), A)


def pad(table: CodewordTable, new_q_p: int) -> CodewordTable:
    """Embed a code into a larger local dimension by appending zero parts."""
    p = table.params
    if new_q_p < p.q_p:
        raise ValueError(f"cannot pad from q_p={p.q_p} down to {new_q_p}")
    new = CodeParams(p.n, new_q_p, p.q_l, p.t)
    index = composition_index(p.n, new_q_p)
    out = np.zeros((p.q_l, new.dim), dtype=complex)
    extra = (0,) * (new_q_p - p.q_p)
    for k, lam in enumerate(enumerate_compositions(p.n, p.q_p)):
        out[:, index[tuple(lam) + extra]] = table.coeffs[:, k]
    return CodewordTable(new, out)


def analytic_7qubit() -> CodewordTable:
    """The exact (n, t) = (7, 1) code with alpha_0 = alpha_7 = sqrt(15)/10."""
    a = np.zeros(8)
    a[0] = a[7] = math.sqrt(15) / 10
    a[2] = math.sqrt(35) / 10
    a[5] = -a[2]
    b = np.array([(-1) ** i * a[7 - i] for i in range(8)])
    return CodewordTable(CodeParams(7, 2, 2, 1), np.array([a, b]))


def reference_block_lengths(t: int, q_l: int = 2) -> dict:
    if t < 0 or q_l < 2:
        raise ValueError("need t >= 0 and q_l >= 2")
    return {
        "singleton": 4 * t + 1,
        "ouyang": (2 * t + 1) ** 2 * (q_l - 1),
        "aab": 4 * t * t + 2 * t + 1,
        "conjectured_min": 3 * t * t + 3 * t + 1,
    }
