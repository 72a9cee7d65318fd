"""Comparison sources: a hidden linear order and the interval adversary.

Both count every call to :meth:`answer`, including reflexive queries and
queries whose outcome is already implied by the known relations.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .exceptions import NotAnExtensionError
from .poset import Poset, levels, transitive_closure

__all__ = [
    "ComparisonSource",
    "HiddenOrderOracle",
    "IntervalAdversary",
    "hidden_order_oracle",
    "adversary_oracle",
    "level_intervals",
    "intervals_consistent",
]


@runtime_checkable
class ComparisonSource(Protocol):
    query_count: int

    def answer(self, u: int, v: int) -> bool:
        """Return whether ``u <= v`` in the hidden total order."""
        ...


class HiddenOrderOracle:
    """Answers queries from a fixed linear extension."""

    def __init__(self, order: Sequence[int], p: Poset | None = None):
        order = tuple(int(v) for v in order)
        n = len(order)
        if sorted(order) != list(range(n)):
            raise NotAnExtensionError("order is not a permutation of 0..n-1")
        self.order = order
        self.rank = [0] * n
        for r, v in enumerate(order):
            self.rank[v] = r
        if p is not None:
            if p.n != n:
                raise NotAnExtensionError("order and poset sizes differ")
            us, vs = np.nonzero(p.rel)
            rank = np.asarray(self.rank)
            if us.size and not (rank[us] < rank[vs]).all():
                raise NotAnExtensionError("order contradicts the poset")
        self.query_count = 0

    def answer(self, u: int, v: int) -> bool:
        self.query_count += 1
        return self.rank[u] <= self.rank[v]

    def __repr__(self):
        return f"HiddenOrderOracle(n={len(self.order)}, queries={self.query_count})"


def hidden_order_oracle(order: Sequence[int], p: Poset) -> HiddenOrderOracle:
    return HiddenOrderOracle(order, p)


def level_intervals(p: Poset) -> list[tuple[Fraction, Fraction]]:
    """A feasible consistent interval collection built from the levels.

    An element of level ``L_i`` gets ``(sum_{j<i}|L_j|/n, sum_{j<=i}|L_j|/n)``.
    """
    n = p.n
    out: list[tuple[Fraction, Fraction]] = [(Fraction(0), Fraction(1))] * n
    acc = 0
    for lev in levels(p).levels:
        lo, hi = Fraction(acc, n), Fraction(acc + len(lev), n)
        for v in lev:
            out[v] = (lo, hi)
        acc += len(lev)
    return out


def intervals_consistent(p: Poset, ivs: Sequence[tuple[Fraction, Fraction]]) -> bool:
    """True iff every interval is inside [0, 1] and ``u < v`` implies ``hi_u <= lo_v``."""
    if len(ivs) != p.n:
        return False
    for lo, hi in ivs:
        if not (0 <= lo < hi <= 1):
            return False
    for u, v in p.pairs():
        if ivs[u][1] > ivs[v][0]:
            return False
    return True


class IntervalAdversary:
    """Midpoint adversary over a consistent collection of open intervals.

    On query ``(a, b)`` it answers yes iff the midpoint of ``a``'s interval
    is at most that of ``b``; the two intervals are then halved so that the
    answer stays forced from then on.
    """

    def __init__(self, p: Poset, intervals: Sequence[tuple[Fraction, Fraction]] | None = None):
        if intervals is None:
            intervals = level_intervals(p)
        ivs = [(Fraction(lo), Fraction(hi)) for lo, hi in intervals]
        if not intervals_consistent(p, ivs):
            raise ValueError("interval collection is not consistent with the poset")
        self.p = p
        self.intervals = ivs
        self.answers: list[tuple[int, int, bool]] = []
        self.query_count = 0

    def answer(self, a: int, b: int) -> bool:
        self.query_count += 1
        if a == b:
            self.answers.append((a, b, True))
            return True
        (alo, ahi), (blo, bhi) = self.intervals[a], self.intervals[b]
        ma, mb = (alo + ahi) / 2, (blo + bhi) / 2
        yes = ma <= mb
        if yes:
            self.intervals[a] = (alo, ma)
            self.intervals[b] = (mb, bhi)
        else:
            self.intervals[a] = (ma, ahi)
            self.intervals[b] = (blo, mb)
        self.answers.append((a, b, yes))
        return yes

    def known_poset(self) -> Poset:
        """Closure of the base poset plus every answer given so far."""
        pairs = self.p.pairs()
        for a, b, yes in self.answers:
            if a != b:
                pairs.append((a, b) if yes else (b, a))
        return transitive_closure(pairs, self.p.n)

    def is_consistent(self) -> bool:
        return intervals_consistent(self.known_poset(), self.intervals)

    def __repr__(self):
        return f"IntervalAdversary(n={self.p.n}, queries={self.query_count})"


def adversary_oracle(p: Poset, ivs: Sequence[tuple[Fraction, Fraction]]) -> IntervalAdversary:
    return IntervalAdversary(p, ivs)
