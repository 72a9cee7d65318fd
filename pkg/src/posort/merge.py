"""Oracle-driven chain merging.

Every routine takes chains already sorted in the hidden order and a
:class:`~posort.oracle.ComparisonSource`; the reported comparison count is
the number of ``answer`` calls the routine itself made.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from .oracle import ComparisonSource

__all__ = [
    "MergeReport",
    "linear_merge",
    "binary_insert",
    "huffman_schedule",
    "execute_schedule",
    "huffman_merge",
    "hwang_lin_merge",
    "hwang_lin_block_size",
]


@dataclass(frozen=True)
class MergeReport:
    merged: tuple
    comparisons: int


def _check_disjoint(*chains):
    seen = set()
    for c in chains:
        for v in c:
            if v in seen:
                raise ValueError(f"element {v} appears twice")
            seen.add(v)


def linear_merge(x: Sequence[int], y: Sequence[int], src: ComparisonSource) -> MergeReport:
    """Repeatedly emit the smaller head."""
    x, y = tuple(x), tuple(y)
    _check_disjoint(x, y)
    out, i, j, q = [], 0, 0, 0
    while i < len(x) and j < len(y):
        q += 1
        if src.answer(x[i], y[j]):
            out.append(x[i])
            i += 1
        else:
            out.append(y[j])
            j += 1
    out.extend(x[i:])
    out.extend(y[j:])
    return MergeReport(tuple(out), q)


def _bisect(c: Sequence[int], lo: int, hi: int, v: int, src: ComparisonSource) -> tuple[int, int]:
    """Insertion point of ``v`` in ``c[lo:hi]`` and the queries spent."""
    q = 0
    while lo < hi:
        mid = (lo + hi) // 2
        q += 1
        if src.answer(v, c[mid]):
            hi = mid
        else:
            lo = mid + 1
    return lo, q


def binary_insert(c: Sequence[int], v: int, src: ComparisonSource) -> MergeReport:
    c = tuple(c)
    if v in c:
        raise ValueError(f"element {v} already in the chain")
    pos, q = _bisect(c, 0, len(c), v, src)
    return MergeReport(c[:pos] + (v,) + c[pos:], q)


def huffman_schedule(sizes: Sequence[int]) -> tuple[tuple[int, int, int], ...]:
    """Merge plan as ``(i, j, new_id)`` triples; chains are numbered by input position.

    The two smallest chains are merged first, equal sizes resolved by the
    smaller id.  Merged chains receive ids ``len(sizes), len(sizes)+1, ...``.
    """
    heap = [(int(s), i) for i, s in enumerate(sizes)]
    heapq.heapify(heap)
    nxt = len(sizes)
    plan = []
    while len(heap) > 1:
        s1, i = heapq.heappop(heap)
        s2, j = heapq.heappop(heap)
        plan.append((i, j, nxt))
        heapq.heappush(heap, (s1 + s2, nxt))
        nxt += 1
    return tuple(plan)


def execute_schedule(chains: Sequence[Sequence[int]], schedule, src: ComparisonSource) -> MergeReport:
    pool = {i: tuple(c) for i, c in enumerate(chains)}
    _check_disjoint(*pool.values())
    q = 0
    for i, j, k in schedule:
        rep = linear_merge(pool.pop(i), pool.pop(j), src)
        pool[k] = rep.merged
        q += rep.comparisons
    if len(pool) != 1:
        raise ValueError("schedule does not reduce the chains to one")
    (merged,) = pool.values()
    return MergeReport(merged, q)


def huffman_merge(chains: Sequence[Sequence[int]], src: ComparisonSource) -> MergeReport:
    if not chains:
        raise ValueError("need at least one chain")
    return execute_schedule(chains, huffman_schedule([len(c) for c in chains]), src)


def hwang_lin_block_size(m: int, k: int) -> int:
    """``2 ** floor(log2(m / k))`` for ``m >= k >= 1``."""
    if not m >= k >= 1:
        raise ValueError("need m >= k >= 1")
    return 1 << ((m // k).bit_length() - 1)


def hwang_lin_merge(x: Sequence[int], y: Sequence[int], src: ComparisonSource) -> MergeReport:
    """Merge by block search along the longer chain.

    Elements of the shorter chain are placed in increasing order.  Each one
    is compared with the last element of successive blocks of ``t`` elements
    of the longer chain, starting at the first element not yet known to be
    smaller; once a block end exceeds it, bisection inside that block fixes
    its position.
    """
    x, y = tuple(x), tuple(y)
    _check_disjoint(x, y)
    if not x or not y:
        return MergeReport(x + y, 0)
    if len(x) < len(y):
        x, y = y, x
    m = len(x)
    t = hwang_lin_block_size(m, len(y))
    out, pos, q = [], 0, 0
    for v in y:
        while pos < m:
            end = min(pos + t, m) - 1
            q += 1
            if src.answer(x[end], v):
                out.extend(x[pos : end + 1])
                pos = end + 1
                continue
            at, dq = _bisect(x, pos, end, v, src)
            q += dq
            out.extend(x[pos:at])
            pos = at
            break
        out.append(v)
    out.extend(x[pos:])
    return MergeReport(tuple(out), q)
