"""Graph entropy of stable-set-polytope points and of convex bipartite graphs.

Weights are exact :class:`fractions.Fraction` values; entropies are reported
as floats computed from them.  The exact entropy of a bipartite graph comes
from the Körner–Marton block partition, which this module computes two ways:
exhaustively (:func:`km_partition_bruteforce`, small graphs only) and through
ratio bisection with a b-matching feasibility test and a min-cut read-off
(:func:`convex_bipartite_entropy`).
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_left, bisect_right
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Hashable, Iterator, Sequence

from .exceptions import TooLargeError
from .poset import ChainDecomposition, Poset, two_chain_cover

__all__ = [
    "BipartiteConvexGraph",
    "StabPoint",
    "KMPartition",
    "binary_entropy",
    "log2_fraction",
    "point_entropy",
    "greedy_point",
    "chain_size_entropy",
    "km_partition_bruteforce",
    "km_to_point",
    "convex_bipartite_entropy",
    "greedy_entropy_bound_check",
    "incomparability_graph",
    "width2_entropy",
    "BRUTEFORCE_GUARD",
]

BRUTEFORCE_GUARD = 15


def log2_fraction(q) -> float:
    """``log2`` of a positive rational, exact up to the final float subtraction."""
    return math.log2(int(q.numerator)) - math.log2(int(q.denominator))


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@dataclass(frozen=True)
class BipartiteConvexGraph:
    """Bipartite graph whose B-side neighbourhoods are intervals of ``side_a``.

    ``nbr[k] = (i, j)`` gives the inclusive position interval in ``side_a``
    adjacent to ``side_b[k]``; ``j == i - 1`` encodes an empty neighbourhood.
    """

    side_a: tuple
    side_b: tuple
    nbr: tuple

    def __post_init__(self):
        object.__setattr__(self, "side_a", tuple(self.side_a))
        object.__setattr__(self, "side_b", tuple(self.side_b))
        nbr = tuple((int(i), int(j)) for i, j in self.nbr)
        object.__setattr__(self, "nbr", nbr)
        if len(nbr) != len(self.side_b):
            raise ValueError("need one neighbourhood interval per B vertex")
        m = len(self.side_a)
        for i, j in nbr:
            if not (0 <= i <= m and i - 1 <= j < m):
                raise ValueError(f"bad neighbourhood interval ({i}, {j})")
        if len(set(self.side_a) | set(self.side_b)) != m + len(self.side_b):
            raise ValueError("vertex labels must be distinct")

    @property
    def n(self) -> int:
        return len(self.side_a) + len(self.side_b)

    def edges(self) -> Iterator[tuple[Hashable, Hashable]]:
        for b, (i, j) in zip(self.side_b, self.nbr):
            for k in range(i, j + 1):
                yield self.side_a[k], b

    def edge_count(self) -> int:
        return sum(j - i + 1 for i, j in self.nbr)


def _as_fraction(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


class StabPoint(Mapping):
    """Exact vertex weights ``x_v`` in the stable set polytope."""

    def __init__(self, weights):
        self._w = {v: _as_fraction(x) for v, x in dict(weights).items()}

    def __getitem__(self, v):
        return self._w[v]

    def __iter__(self):
        return iter(self._w)

    def __len__(self):
        return len(self._w)

    def __eq__(self, other):
        if isinstance(other, StabPoint):
            return self._w == other._w
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._w.items()))

    def __repr__(self):
        body = ", ".join(f"{v!r}: {x}" for v, x in self._w.items())
        return f"StabPoint({{{body}}})"

    def is_feasible(self, g: BipartiteConvexGraph | None = None) -> bool:
        """``0 < x_v <= 1`` everywhere and ``x_u + x_v <= 1`` on every edge of ``g``."""
        if any(not 0 < x <= 1 for x in self._w.values()):
            return False
        if g is not None:
            return all(self._w[a] + self._w[b] <= 1 for a, b in g.edges())
        return True


@dataclass(frozen=True)
class KMPartition:
    """Körner–Marton blocks ``(A_i, B_i)`` in extraction order."""

    blocks: tuple
    entropy: float

    def ratios(self) -> list:
        """``|A_i| / |B_i|`` per block (``inf`` for blocks with empty ``B_i``)."""
        return [Fraction(len(a), len(b)) if b else math.inf for a, b in self.blocks]


def point_entropy(x: Mapping) -> float:
    """``-(1/n) * sum(log2 x_v)``."""
    n = len(x)
    if n == 0:
        return 0.0
    return -sum(log2_fraction(w) for w in x.values()) / n


def greedy_point(d: ChainDecomposition) -> StabPoint:
    """Weight every element of chain ``C_i`` by ``|C_i| / n``."""
    n = d.n
    if n == 0:
        raise ValueError("empty decomposition")
    return StabPoint({v: Fraction(len(c), n) for c in d.chains for v in c})


def chain_size_entropy(d: ChainDecomposition) -> float:
    n = d.n
    if n == 0:
        raise ValueError("empty decomposition")
    return -sum(len(c) / n * math.log2(len(c) / n) for c in d.chains if c)


def _partition_entropy(blocks, n: int) -> float:
    if n == 0:
        return 0.0
    total = 0.0
    for a, b in blocks:
        s = len(a) + len(b)
        total += s / n * binary_entropy(len(a) / s)
    return total


def km_partition_bruteforce(g: BipartiteConvexGraph) -> KMPartition:
    """Körner–Marton partition by exhaustive subset search (``|A| <= 15``).

    Among maximum-ratio subsets the largest is taken (it is the union of
    all maximisers), ties broken lexicographically.
    """
    ma, mb = len(g.side_a), len(g.side_b)
    if ma > BRUTEFORCE_GUARD:
        raise TooLargeError(f"|A|={ma} exceeds the guard of {BRUTEFORCE_GUARD}")
    nb_of_a = [0] * ma
    for k, (i, j) in enumerate(g.nbr):
        for pos in range(i, j + 1):
            nb_of_a[pos] |= 1 << k
    alive_a = (1 << ma) - 1
    alive_b = (1 << mb) - 1
    blocks = []
    while alive_a or alive_b:
        if not alive_a:
            k = (alive_b & -alive_b).bit_length() - 1
            blocks.append(((), (g.side_b[k],)))
            alive_b &= ~(1 << k)
            continue
        idx = [i for i in range(ma) if alive_a >> i & 1]
        iso = [i for i in idx if nb_of_a[i] & alive_b == 0]
        if iso:
            blocks.append(((g.side_a[iso[0]],), ()))
            alive_a &= ~(1 << iso[0])
            continue
        k = len(idx)
        nbrs = [nb_of_a[i] & alive_b for i in idx]
        nmask = [0] * (1 << k)
        best = None
        for mask in range(1, 1 << k):
            low = mask & -mask
            nmask[mask] = nmask[mask ^ low] | nbrs[low.bit_length() - 1]
            size = mask.bit_count()
            nsize = nmask[mask].bit_count()
            members = tuple(idx[t] for t in range(k) if mask >> t & 1)
            key = (size, nsize, members)
            if best is None:
                best = (key, mask)
                continue
            (bs, bn, bm), _ = best
            lhs, rhs = size * bn, bs * nsize
            if lhs > rhs or (lhs == rhs and (size > bs or (size == bs and members < bm))):
                best = (key, mask)
        (_, _, members), mask = best
        bset = nmask[mask]
        blocks.append(
            (tuple(g.side_a[i] for i in members), tuple(g.side_b[t] for t in range(mb) if bset >> t & 1))
        )
        for i in members:
            alive_a &= ~(1 << i)
        alive_b &= ~bset
    return KMPartition(tuple(blocks), _partition_entropy(blocks, g.n))


def km_to_point(part: KMPartition) -> StabPoint:
    """``x_u = |A_i| / (|A_i| + |B_i|)`` on ``A_i`` and symmetrically on ``B_i``."""
    w = {}
    for a, b in part.blocks:
        s = len(a) + len(b)
        if s == 0:
            raise ValueError("empty block")
        for u in a:
            w[u] = Fraction(len(a), s)
        for v in b:
            w[v] = Fraction(len(b), s)
    return StabPoint(w)


def _glover_b_matching(windows: Sequence[tuple[int, int]], m: int, alpha: int, beta: int):
    """Maximum b-matching, A-capacities ``alpha`` and B-capacities ``beta``.

    ``windows[k]`` is the (compressed, inclusive) A-interval of B vertex k.
    A vertices are served left to right, each drawing from the open B
    vertices with the earliest-ending window first.
    """
    starts: list[list[int]] = [[] for _ in range(m)]
    for k, (s, e) in enumerate(windows):
        if s <= e:
            starts[s].append(k)
    cap = [beta] * len(windows)
    heap: list[tuple[int, int]] = []
    assigned: list[list[tuple[int, int]]] = [[] for _ in range(m)]
    total = 0
    for i in range(m):
        for k in starts[i]:
            heapq.heappush(heap, (windows[k][1], k))
        need = alpha
        while need and heap:
            e, k = heap[0]
            if e < i:
                heapq.heappop(heap)
                continue
            amt = min(need, cap[k])
            assigned[i].append((k, amt))
            need -= amt
            cap[k] -= amt
            if cap[k] == 0:
                heapq.heappop(heap)
        total += alpha - need
    return total, assigned, cap


def _min_cut_source_side(windows, m, assigned, cap) -> list[int]:
    """A vertices that cannot reach the sink in the residual network."""
    reached_a = [False] * m
    reached_b = [False] * len(windows)
    # next_free[i]: smallest unreached A index >= i (path-compressed)
    next_free = list(range(m + 1))

    def find(i):
        root = i
        while next_free[root] != root:
            root = next_free[root]
        while next_free[i] != root:
            next_free[i], i = root, next_free[i]
        return root

    queue = [k for k, c in enumerate(cap) if c > 0]
    for k in queue:
        reached_b[k] = True
    while queue:
        k = queue.pop()
        s, e = windows[k]
        i = find(s) if s <= e else m
        while i <= e:
            reached_a[i] = True
            next_free[i] = i + 1
            for k2, amt in assigned[i]:
                if amt > 0 and not reached_b[k2]:
                    reached_b[k2] = True
                    queue.append(k2)
            i = find(i + 1)
    return [i for i in range(m) if not reached_a[i]]


@lru_cache(maxsize=8)
def _candidate_ratios(max_p: int, max_q: int) -> list[tuple[int, int]]:
    """Distinct fractions ``p/q`` with ``p <= max_p``, ``q <= max_q`` in increasing order.

    Each residual graph of one Körner–Marton run draws its guesses from
    this superset; extra candidates never change where the bisection lands
    because the feasibility test is monotone in the guessed ratio.
    """
    pairs = [(p, q) for q in range(1, max_q + 1) for p in range(1, max_p + 1) if math.gcd(p, q) == 1]
    pairs.sort(key=lambda r: r[0] / r[1])
    return pairs


@lru_cache(maxsize=4096)
def _convex_km(g: BipartiteConvexGraph) -> tuple:
    ma = len(g.side_a)
    alive_a = list(range(ma))
    alive_b = list(range(len(g.side_b)))
    blocks = []
    while alive_a or alive_b:
        if not alive_a:
            blocks.extend(((), (g.side_b[k],)) for k in alive_b)
            break
        m = len(alive_a)
        windows = []
        for k in alive_b:
            i, j = g.nbr[k]
            windows.append((bisect_left(alive_a, i), bisect_right(alive_a, j) - 1))
        cover = [0] * (m + 1)
        for s, e in windows:
            if s <= e:
                cover[s] += 1
                cover[e + 1] -= 1
        isolated, run = [], 0
        for t in range(m):
            run += cover[t]
            if run == 0:
                isolated.append(t)
        if isolated:
            for t in isolated:
                blocks.append(((g.side_a[alive_a[t]],), ()))
            drop = set(isolated)
            alive_a = [a for t, a in enumerate(alive_a) if t not in drop]
            continue
        ratios = _candidate_ratios(ma, len(g.side_b))

        def exceeds(rho: tuple[int, int]):
            beta, alpha = rho
            total, assigned, cap = _glover_b_matching(windows, m, alpha, beta)
            return total < alpha * m, (assigned, cap)

        lo, hi = 0, len(ratios) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if exceeds(ratios[mid])[0]:
                lo = mid + 1
            else:
                hi = mid
        flag, (assigned, cap) = exceeds(ratios[lo])
        best = Fraction(*ratios[lo])
        if flag:
            raise AssertionError("ratio bisection ended on an infeasible guess")
        chosen = _min_cut_source_side(windows, m, assigned, cap)
        inside = [0] * (m + 1)
        for t in chosen:
            inside[t + 1] = 1
        for t in range(m):
            inside[t + 1] += inside[t]
        nb = [k for k, (s, e) in zip(alive_b, windows) if s <= e and inside[e + 1] - inside[s] > 0]
        if not chosen or Fraction(len(chosen), len(nb)) != best:
            raise AssertionError("min-cut read-off did not return a maximum-ratio set")
        blocks.append((tuple(g.side_a[alive_a[t]] for t in chosen), tuple(g.side_b[k] for k in nb)))
        drop_a = set(chosen)
        alive_a = [a for t, a in enumerate(alive_a) if t not in drop_a]
        drop_b = set(nb)
        alive_b = [k for k in alive_b if k not in drop_b]
    return tuple(blocks)


def convex_bipartite_entropy(g: BipartiteConvexGraph) -> tuple[KMPartition, StabPoint]:
    """Exact entropy of an A-convex bipartite graph and its optimal point.

    Each Körner–Marton step finds the best ratio ``|A_i| / |N(A_i)|`` by
    bisection over candidate fractions, deciding every guess with a maximum
    b-matching, then reads the inclusion-maximal maximiser off the residual
    network of the last feasible flow.
    """
    blocks = _convex_km(g)
    part = KMPartition(blocks, _partition_entropy(blocks, g.n))
    return part, km_to_point(part)


def greedy_entropy_bound_check(d: ChainDecomposition, H_exact: float, eps: float) -> bool:
    if eps <= 0:
        raise ValueError("eps must be positive")
    h = point_entropy(greedy_point(d))
    return h <= (1 + eps) * H_exact + (1 + eps) * math.log2(1 + 1 / eps) + 1e-9


def incomparability_graph(p: Poset, chain: Sequence[int], others: Sequence[int] | None = None) -> BipartiteConvexGraph:
    """Incomparabilities between a chain of ``p`` and the other elements.

    The result is convex on the chain side: an element's incomparable
    chain members form a contiguous run.
    """
    chain = tuple(chain)
    if others is None:
        inside = set(chain)
        others = [v for v in range(p.n) if v not in inside]
    nbr = []
    for v in others:
        inc = [i for i, a in enumerate(chain) if not p.comparable(a, v)]
        if inc and inc[-1] - inc[0] + 1 != len(inc):
            raise ValueError(f"incomparable set of {v} is not an interval of the chain")
        nbr.append((inc[0], inc[-1]) if inc else (0, -1))
    return BipartiteConvexGraph(chain, tuple(others), tuple(nbr))


def width2_entropy(p: Poset, cover=None):
    """Exact ``H`` of the incomparability graph of a width-<=2 poset.

    Returns ``(H, partition, point, cover)``; raises ``ValueError`` when the
    width exceeds two.
    """
    if cover is None:
        cover = two_chain_cover(p)
        if cover is None:
            raise ValueError("poset has width greater than 2")
    a, b = cover
    g = incomparability_graph(p, a, b)
    part, x = convex_bipartite_entropy(g)
    return part.entropy, part, x, cover
