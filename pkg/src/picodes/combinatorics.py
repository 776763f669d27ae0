"""Compositions, multinomials and the deletion-transition coefficients.

Compositions of ``n`` into ``q`` parts are stored as plain tuples.  The
canonical order used everywhere (serialized tables included) sorts by the
suffix ``parts[1:]`` in ascending lexicographic order, so for ``q = 2`` the
position of ``(n - j, j)`` is exactly ``j``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence

Composition = tuple  # tuple[int, ...]


def _suffixes(n: int, slots: int) -> Iterator[tuple[int, ...]]:
    # all tuples of length `slots` with sum <= n, ascending lexicographic
    if slots == 0:
        yield ()
        return
    for first in range(n + 1):
        for rest in _suffixes(n - first, slots - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_compositions(n: int, q: int) -> tuple[Composition, ...]:
    """All compositions of ``n`` into ``q`` parts in canonical order."""
    if q < 1:
        raise ValueError(f"q must be positive, got {q}")
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if q == 1:
        return ((n,),)
    return tuple((n - sum(s),) + s for s in _suffixes(n, q - 1))


@lru_cache(maxsize=None)
def composition_index(n: int, q: int) -> dict[Composition, int]:
    """Inverse of :func:`enumerate_compositions`."""
    return {lam: k for k, lam in enumerate(enumerate_compositions(n, q))}


def index_of(lam: Sequence[int]) -> int:
    lam = tuple(lam)
    return composition_index(sum(lam), len(lam))[lam]


def num_compositions(n: int, q: int) -> int:
    """Dimension of the symmetric subspace, C(n+q-1, q-1)."""
    return math.comb(n + q - 1, q - 1)


def is_composition(lam: Sequence[int], n: int | None = None) -> bool:
    return all(x >= 0 for x in lam) and (n is None or sum(lam) == n)


def multinomial(n: int, lam: Sequence[int]) -> int:
    """Exact multinomial coefficient n! / prod(lam_i!)."""
    if sum(lam) != n:
        raise ValueError(f"composition {tuple(lam)} does not sum to {n}")
    if any(x < 0 for x in lam):
        raise ValueError(f"composition {tuple(lam)} has a negative entry")
    out = 1
    left = n
    for part in lam:
        out *= math.comb(left, part)
        left -= part
    return out


def log_multinomial(n: int, lam: Sequence[int]) -> float:
    if sum(lam) != n:
        raise ValueError(f"composition {tuple(lam)} does not sum to {n}")
    if any(x < 0 for x in lam):
        raise ValueError(f"composition {tuple(lam)} has a negative entry")
    return math.lgamma(n + 1) - sum(math.lgamma(x + 1) for x in lam)


def multinomial_or_zero(n: int, lam: Sequence[int]) -> int:
    """Multinomial that vanishes when any entry is negative."""
    if any(x < 0 for x in lam):
        return 0
    return multinomial(n, lam)


def _check_lengths(*comps: Sequence[int]) -> int:
    lengths = {len(c) for c in comps}
    if len(lengths) != 1:
        raise ValueError(f"composition lengths differ: {sorted(lengths)}")
    return lengths.pop()


def transition_coeff(n: int, t: int, lam, mu, nu) -> float:
    """binom(n-2t, lam-mu) / sqrt(binom(n, lam) binom(n, lam-mu+nu)).

    Zero whenever ``lam - mu`` or ``lam - mu + nu`` has a negative entry.
    Evaluated through log-gamma so that large ``n`` does not overflow.
    """
    _check_lengths(lam, mu, nu)
    if sum(mu) != 2 * t or sum(nu) != 2 * t:
        raise ValueError("mu and nu must be compositions of 2t")
    if sum(lam) != n:
        raise ValueError(f"lambda {tuple(lam)} does not sum to n={n}")
    if n < 2 * t:
        raise ValueError(f"need n >= 2t, got n={n}, t={t}")
    diff = [a - b for a, b in zip(lam, mu)]
    if any(x < 0 for x in diff):
        return 0.0
    shifted = [d + c for d, c in zip(diff, nu)]
    if any(x < 0 for x in shifted):
        return 0.0
    log_val = log_multinomial(n - 2 * t, diff) - 0.5 * (
        log_multinomial(n, lam) + log_multinomial(n, shifted)
    )
    return math.exp(log_val)


def diagonal_ratio_exact(n: int, t: int, lam, mu) -> Fraction:
    """binom(n-2t, lam-mu) / binom(n, lam) as an exact rational."""
    _check_lengths(lam, mu)
    return Fraction(multinomial_or_zero(n - 2 * t, [a - b for a, b in zip(lam, mu)]),
                    multinomial(n, lam))


def diagonal_ratio_log(n: int, t: int, lam, mu) -> float:
    """Float counterpart of :func:`diagonal_ratio_exact` via log-gamma."""
    _check_lengths(lam, mu)
    diff = [a - b for a, b in zip(lam, mu)]
    if any(x < 0 for x in diff):
        return 0.0
    return math.exp(log_multinomial(n - 2 * t, diff) - log_multinomial(n, lam))


def strings_of_weight(n: int, q: int, lam: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Brute-force iterator over strings in [q]^n with weight ``lam``."""
    for s in product(range(q), repeat=n):
        if all(s.count(k) == lam[k] for k in range(q)):
            yield s


def weight(s: Sequence[int], q: int) -> Composition:
    return tuple(sum(1 for x in s if x == k) for k in range(q))
