"""Posets as dense transitively closed relation matrices.

Elements are the integers ``0..n-1``.  ``rel[u, v]`` is true when ``u`` is
strictly below ``v``.  Besides the container itself this module has the
structural routines the sorters need: levels, maximum chains, greedy chain
decompositions, linear-extension counting and sampling, and the plain-text
file format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exceptions import CycleError, TooLargeError

__all__ = [
    "Poset",
    "LevelDecomposition",
    "ChainDecomposition",
    "transitive_closure",
    "levels",
    "maximum_chain",
    "greedy_chain_decomposition",
    "count_linear_extensions",
    "log2_linear_extensions",
    "linear_extensions",
    "random_linear_extension",
    "is_linear_extension",
    "cut_points",
    "add_chain_relations",
    "induced_subposet",
    "random_poset",
    "random_two_chain_poset",
    "natural_posets",
    "two_chain_cover",
    "parse_poset",
    "format_poset",
    "read_poset",
    "write_poset",
    "EXTENSION_GUARD",
]

# Largest n accepted by the down-set dynamic program.
EXTENSION_GUARD = 20


@dataclass(frozen=True, eq=False)
class Poset:
    """A finite strict partial order on ``range(n)``.

    Instances are immutable; ``rel`` is a read-only boolean matrix.  Use
    :func:`transitive_closure` or :meth:`from_pairs` to build one from
    arbitrary relation pairs.
    """

    rel: np.ndarray

    def __post_init__(self):
        rel = np.array(self.rel, dtype=bool, copy=True)
        if rel.ndim != 2 or rel.shape[0] != rel.shape[1]:
            raise ValueError("relation matrix must be square")
        rel.flags.writeable = False
        object.__setattr__(self, "rel", rel)

    @property
    def n(self) -> int:
        return self.rel.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Poset):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.rel, other.rel))

    def __hash__(self):
        return hash((self.n, self.rel.tobytes()))

    def __repr__(self):
        return f"Poset(n={self.n}, relations={int(self.rel.sum())})"

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], n: int) -> "Poset":
        return transitive_closure(pairs, n)

    @classmethod
    def chain(cls, n: int) -> "Poset":
        return cls(np.triu(np.ones((n, n), dtype=bool), k=1))

    @classmethod
    def antichain(cls, n: int) -> "Poset":
        return cls(np.zeros((n, n), dtype=bool))

    @cached_property
    def pred_masks(self) -> tuple[int, ...]:
        """Bit ``u`` of entry ``v`` is set iff ``u < v``."""
        return _row_masks(self.rel.T)

    @cached_property
    def succ_masks(self) -> tuple[int, ...]:
        return _row_masks(self.rel)

    def less(self, u: int, v: int) -> bool:
        return bool(self.rel[u, v])

    def comparable(self, u: int, v: int) -> bool:
        return bool(self.rel[u, v] or self.rel[v, u])

    def predecessors(self, v: int) -> list[int]:
        return np.flatnonzero(self.rel[:, v]).tolist()

    def successors(self, v: int) -> list[int]:
        return np.flatnonzero(self.rel[v]).tolist()

    def pairs(self) -> list[tuple[int, int]]:
        us, vs = np.nonzero(self.rel)
        return list(zip(us.tolist(), vs.tolist()))

    def check(self) -> None:
        """Raise ``ValueError`` unless the strict-order invariants hold."""
        rel = self.rel
        if rel.diagonal().any():
            raise ValueError("relation is not irreflexive")
        if (rel & rel.T).any():
            raise ValueError("relation is not antisymmetric")
        closed = (rel.astype(np.int32) @ rel.astype(np.int32)) > 0
        if (closed & ~rel).any():
            raise ValueError("relation is not transitively closed")


def _row_masks(rel: np.ndarray) -> tuple[int, ...]:
    if rel.shape[0] == 0:
        return ()
    packed = np.packbits(rel, axis=1, bitorder="little")
    return tuple(int.from_bytes(row.tobytes(), "little") for row in packed)


def _bits(m: int) -> Iterator[int]:
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


@dataclass(frozen=True)
class LevelDecomposition:
    """Levels ``L_1..L_h`` (0-based list here) and recorded predecessors."""

    levels: tuple[tuple[int, ...], ...]
    pred: dict[int, int] = field(compare=True)

    @property
    def height(self) -> int:
        return len(self.levels)

    def level_of(self) -> dict[int, int]:
        return {v: i for i, lev in enumerate(self.levels) for v in lev}


@dataclass(frozen=True)
class ChainDecomposition:
    """Ordered partition into chains, each listed bottom to top."""

    chains: tuple[tuple[int, ...], ...]

    def __iter__(self):
        return iter(self.chains)

    def __len__(self):
        return len(self.chains)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.chains)

    @property
    def n(self) -> int:
        return sum(self.sizes)


def transitive_closure(pairs: Iterable[tuple[int, int]], n: int) -> Poset:
    """Close the relation given by ``pairs`` on ``range(n)``.

    Raises :class:`CycleError` if the closure is not antisymmetric.
    """
    rel = np.zeros((n, n), dtype=bool)
    for u, v in pairs:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"pair ({u}, {v}) out of range for n={n}")
        if u == v:
            raise CycleError(f"reflexive pair ({u}, {u})")
        rel[u, v] = True
    for k in range(n):
        col = rel[:, k]
        if col.any():
            rel[col] |= rel[k]
    if rel.diagonal().any():
        bad = int(np.flatnonzero(rel.diagonal())[0])
        raise CycleError(f"relations contain a cycle through element {bad}")
    return Poset(rel)


def _levels_of_matrix(rel: np.ndarray) -> tuple[list[list[int]], dict[int, int]]:
    # Local indices; peel minimal elements, updating in-degrees level by level.
    m = rel.shape[0]
    indeg = rel.sum(axis=0)
    remaining = np.ones(m, dtype=bool)
    out: list[list[int]] = []
    pred: dict[int, int] = {}
    prev = None
    while remaining.any():
        cur = np.flatnonzero((indeg == 0) & remaining)
        if prev is not None:
            first = rel[np.ix_(prev, cur)].argmax(axis=0)
            pred.update(zip(cur.tolist(), prev[first].tolist()))
        out.append(cur.tolist())
        remaining[cur] = False
        indeg -= rel[cur].sum(axis=0)
        prev = cur
    return out, pred


# Up to this size the bitmask routines beat the numpy ones.
_MASK_LIMIT = 64


def _levels_of_masks(pred: Sequence[int], active: int) -> tuple[list[list[int]], dict[int, int]]:
    # Global ids; only elements in ``active`` take part.
    out: list[list[int]] = []
    choice: dict[int, int] = {}
    remaining, prev = active, 0
    while remaining:
        lev = [v for v in _bits(remaining) if not pred[v] & remaining]
        cur = 0
        for v in lev:
            cur |= 1 << v
            if prev:
                below = pred[v] & prev
                choice[v] = (below & -below).bit_length() - 1
        out.append(lev)
        remaining &= ~cur
        prev = cur
    return out, choice


def levels(p: Poset) -> LevelDecomposition:
    """Peel minimal elements repeatedly; record one predecessor per element.

    The recorded predecessor of an element of ``L_i`` is the smallest id
    among its predecessors in ``L_{i-1}``.
    """
    if p.n <= _MASK_LIMIT:
        lv, pred = _levels_of_masks(p.pred_masks, (1 << p.n) - 1)
    else:
        lv, pred = _levels_of_matrix(p.rel)
    return LevelDecomposition(tuple(tuple(x) for x in lv), pred)


def maximum_chain(p: Poset) -> tuple[int, ...]:
    """A chain of maximum size, built by following recorded predecessors."""
    if p.n == 0:
        return ()
    dec = levels(p)
    v = min(dec.levels[-1])
    chain = [v]
    while v in dec.pred:
        v = dec.pred[v]
        chain.append(v)
    return tuple(reversed(chain))


def _chain_from_subset(rel: np.ndarray, active: list[int]) -> list[int]:
    sub = rel[np.ix_(active, active)]
    lv, pred = _levels_of_matrix(sub)
    v = min(lv[-1])
    chain = [v]
    while v in pred:
        v = pred[v]
        chain.append(v)
    return [active[i] for i in reversed(chain)]


class _PredecessorTables:
    """Incrementally maintained levels for the low-height phase.

    ``table[v][j - 1]`` holds the predecessors of ``v`` lying exactly ``j``
    levels below it.
    """

    def __init__(self, rel: np.ndarray, active: list[int]):
        self.rel = rel
        self.active = set(active)
        sub = rel[np.ix_(active, active)]
        lv, _ = _levels_of_matrix(sub)
        self.level: dict[int, int] = {}
        self.by_level: dict[int, set[int]] = {}
        for i, lev in enumerate(lv, start=1):
            self.by_level[i] = {active[k] for k in lev}
            for k in lev:
                self.level[active[k]] = i
        self.succ = {v: [w for w in np.flatnonzero(rel[v]).tolist() if w in self.active] for v in active}
        self.table: dict[int, list[set[int]]] = {}
        for v in active:
            t: list[set[int]] = [set() for _ in range(self.level[v] - 1)]
            for u in np.flatnonzero(rel[:, v]).tolist():
                if u in self.active:
                    t[self.level[v] - self.level[u] - 1].add(u)
            self.table[v] = t

    @property
    def height(self) -> int:
        return max((i for i, s in self.by_level.items() if s), default=0)

    def maximum_chain(self) -> list[int]:
        v = min(self.by_level[self.height])
        chain = [v]
        while self.level[v] > 1:
            v = min(self.table[v][0])
            chain.append(v)
        return chain[::-1]

    def remove_chain(self, chain: Sequence[int]) -> None:
        gone = set(chain)
        marked: set[int] = set()
        for u in chain:
            self.active.discard(u)
            self.by_level[self.level[u]].discard(u)
        for u in chain:
            for v in self.succ[u]:
                if v in gone or v not in self.active:
                    continue
                k = self.level[v] - self.level[u]
                bucket = self.table[v][k - 1]
                bucket.discard(u)
                if k == 1 and not bucket:
                    marked.add(v)
        for v in gone:
            del self.table[v]
        top = max(self.by_level, default=0)
        for i in range(1, top + 1):
            here = sorted(v for v in marked if self.level[v] == i)
            for u in here:
                marked.discard(u)
                self._drop(u, marked)

    def _drop(self, u: int, marked: set[int]) -> None:
        t = self.table[u]
        j = next((k for k, s in enumerate(t, start=1) if s), None)
        old = self.level[u]
        d = old - 1 if j is None else j - 1
        if d == 0:
            return
        self.table[u] = t[d:]
        self.by_level[old].discard(u)
        self.level[u] = old - d
        self.by_level[old - d].add(u)
        for v in self.succ[u]:
            if v not in self.active:
                continue
            k = self.level[v] - old
            self.table[v][k - 1].discard(u)
            self.table[v][k + d - 1].add(u)
            if k == 1 and not self.table[v][0]:
                marked.add(v)


def greedy_chain_decomposition(p: Poset) -> ChainDecomposition:
    """Repeatedly extract a maximum chain until nothing is left.

    While the residual height exceeds ``sqrt(n)`` the levels are rebuilt
    from scratch after each extraction; afterwards they are maintained
    through per-element predecessor tables.
    """
    n = p.n
    if n <= _MASK_LIMIT:
        return _greedy_small(p)
    active = list(range(n))
    chains: list[tuple[int, ...]] = []
    while active:
        sub = p.rel[np.ix_(active, active)]
        lv, _ = _levels_of_matrix(sub)
        if len(lv) ** 2 <= n:
            break
        c = _chain_from_subset(p.rel, active)
        chains.append(tuple(c))
        drop = set(c)
        active = [v for v in active if v not in drop]
    if active:
        tables = _PredecessorTables(p.rel, active)
        while tables.active:
            c = tables.maximum_chain()
            chains.append(tuple(c))
            tables.remove_chain(c)
    return ChainDecomposition(tuple(chains))


def _greedy_small(p: Poset, active: int | None = None) -> ChainDecomposition:
    # Levels and recorded predecessors are canonical, so rebuilding them
    # after every extraction gives the same chains as the table updates.
    pred = p.pred_masks
    if active is None:
        active = (1 << p.n) - 1
    chains: list[tuple[int, ...]] = []
    while active:
        lv, choice = _levels_of_masks(pred, active)
        v = min(lv[-1])
        chain = [v]
        while v in choice:
            v = choice[v]
            chain.append(v)
        chains.append(tuple(reversed(chain)))
        for v in chain:
            active &= ~(1 << v)
    return ChainDecomposition(tuple(chains))


@lru_cache(maxsize=64)
def _extension_counter(pred: tuple[int, ...]):
    n = len(pred)
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def count(placed: int) -> int:
        if placed == full:
            return 1
        total = 0
        rest = full & ~placed
        while rest:
            low = rest & -rest
            v = low.bit_length() - 1
            if pred[v] & placed == pred[v]:
                total += count(placed | low)
            rest ^= low
        return total

    return count


def count_linear_extensions(p: Poset) -> int:
    """Exact ``e(P)`` by dynamic programming over down-sets (``n <= EXTENSION_GUARD``)."""
    if p.n > EXTENSION_GUARD:
        raise TooLargeError(f"n={p.n} exceeds the guard of {EXTENSION_GUARD}")
    return _extension_counter(p.pred_masks)(0)


def log2_linear_extensions(p: Poset) -> float:
    return math.log2(count_linear_extensions(p))


def linear_extensions(p: Poset) -> Iterator[tuple[int, ...]]:
    """Yield every linear extension, lexicographically."""
    n = p.n
    pred = p.pred_masks
    prefix: list[int] = []

    def rec(placed: int):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(n):
            if not placed >> v & 1 and pred[v] & placed == pred[v]:
                prefix.append(v)
                yield from rec(placed | 1 << v)
                prefix.pop()

    yield from rec(0)


def random_linear_extension(p: Poset, seed=None) -> tuple[int, ...]:
    """Sample a linear extension.

    Uniform (via down-set counts) when ``n`` is within the counting guard,
    otherwise a random topological shuffle, which is not uniform.
    """
    rng = np.random.default_rng(seed)
    n = p.n
    out: list[int] = []
    if n <= EXTENSION_GUARD:
        pred = p.pred_masks
        placed = 0
        count = _extension_counter(pred)
        remaining = count(0)
        while len(out) < n:
            r = int(rng.integers(remaining)) if remaining < 2**62 else int(rng.random() * remaining)
            for v in range(n):
                if placed >> v & 1 or pred[v] & placed != pred[v]:
                    continue
                c = count(placed | 1 << v)
                if r < c:
                    out.append(v)
                    placed |= 1 << v
                    remaining = c
                    break
                r -= c
        return tuple(out)
    indeg = p.rel.sum(axis=0)
    avail = np.flatnonzero(indeg == 0).tolist()
    while avail:
        k = int(rng.integers(len(avail)))
        avail[k], avail[-1] = avail[-1], avail[k]
        v = avail.pop()
        out.append(v)
        succ = np.flatnonzero(p.rel[v])
        indeg[succ] -= 1
        avail.extend(succ[indeg[succ] == 0].tolist())
    return tuple(out)


def is_linear_extension(p: Poset, order: Sequence[int]) -> bool:
    if sorted(order) != list(range(p.n)):
        return False
    rank = np.empty(p.n, dtype=np.int64)
    rank[list(order)] = np.arange(p.n)
    us, vs = np.nonzero(p.rel)
    return bool((rank[us] < rank[vs]).all())


def cut_points(p: Poset) -> set[int]:
    """Elements comparable to every other element."""
    comp = p.rel | p.rel.T
    return set(np.flatnonzero(comp.sum(axis=1) == p.n - 1).tolist())


def add_chain_relations(p: Poset, chain: Sequence[int]) -> Poset:
    """Close ``p`` together with the consecutive relations of ``chain``."""
    rel = np.array(p.rel, copy=True)
    for u, v in zip(chain, chain[1:]):
        if rel[v, u] or u == v:
            raise CycleError(f"chain relation {u} < {v} contradicts the poset")
        if rel[u, v]:
            continue
        below = rel[:, u].copy()
        below[u] = True
        above = rel[v].copy()
        above[v] = True
        rel |= np.outer(below, above)
    return Poset(rel)


def induced_subposet(p: Poset, elements: Sequence[int]) -> Poset:
    """The restriction of ``p`` to ``elements``, relabelled ``0..k-1``."""
    idx = list(elements)
    return Poset(p.rel[np.ix_(idx, idx)])


def random_poset(n: int, density: float, seed=None) -> Poset:
    """Random closure: shuffle, keep each forward pair with prob. ``density``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    keep = np.triu(rng.random((n, n)) < density, k=1)
    rel = np.zeros((n, n), dtype=bool)
    rel[np.ix_(perm, perm)] = keep
    return transitive_closure(zip(*np.nonzero(rel)), n) if n else Poset.antichain(0)


def random_two_chain_poset(n: int, seed=None, spread: int | None = None):
    """Random poset covered by two chains, returned as ``(p, a, b)``.

    A hidden reference order is drawn and split into two chains; each
    element of ``a`` then forgets a random number of its relations to ``b``
    on both sides (at most ``spread``, random when omitted), keeping the
    known bounds monotone along ``a``.
    """
    rng = np.random.default_rng(seed)
    perm = [int(v) for v in rng.permutation(n)]
    side = rng.random(n) < 0.5
    a = [v for v, s in zip(perm, side) if s]
    b = [v for v, s in zip(perm, side) if not s]
    if spread is None:
        spread = int(rng.integers(0, n + 1)) if n else 0
    below = np.cumsum(~side)[side] if n else np.zeros(0, dtype=int)
    lo = np.maximum.accumulate(np.maximum(below - rng.integers(0, spread + 1, len(a)), 0)) if a else below
    hi = np.minimum(below + rng.integers(0, spread + 1, len(a)), len(b))
    hi = np.minimum.accumulate(hi[::-1])[::-1] if a else hi
    pairs = list(zip(a, a[1:])) + list(zip(b, b[1:]))
    for u, l, h in zip(a, lo, hi):
        if l:
            pairs.append((b[l - 1], u))
        if h < len(b):
            pairs.append((u, b[h]))
    return transitive_closure(pairs, n), tuple(a), tuple(b)


def _down_sets(pred: list[int], k: int) -> Iterator[int]:
    # Down-sets of a naturally labelled poset on 0..k-1, each exactly once.
    def rec(v: int, chosen: int):
        if v < 0:
            yield chosen
            return
        if chosen >> v & 1:
            yield from rec(v - 1, chosen)
            return
        yield from rec(v - 1, chosen)
        yield from rec(v - 1, chosen | 1 << v | pred[v])

    yield from rec(k - 1, 0)


def _has_antichain(mask: int, comp: Sequence[int], size: int) -> bool:
    # Is there an antichain of ``size`` elements inside ``mask``?
    if size <= 0:
        return True
    while mask:
        low = mask & -mask
        v = low.bit_length() - 1
        mask ^= low
        if _has_antichain(mask & ~comp[v], comp, size - 1):
            return True
    return False


def natural_posets(n: int, max_width: int | None = None) -> Iterator[Poset]:
    """Every naturally labelled poset on ``n`` elements (``u < v`` only if ``u < v`` as ints).

    Each isomorphism class occurs at least once.  With ``max_width`` only
    posets without an antichain of more than ``max_width`` elements are
    produced; the new top label is incomparable exactly to the elements
    outside its down-set, so the pruning happens while building.
    """
    if max_width is not None and max_width < 1 and n > 0:
        return

    def emit(pred):
        rel = np.zeros((n, n), dtype=bool)
        for v, m in enumerate(pred):
            for u in _bits(m):
                rel[u, v] = True
        return Poset(rel)

    def rec(pred: list[int], comp: list[int]):
        k = len(pred)
        if k == n:
            yield emit(pred)
            return
        full = (1 << k) - 1
        for d in _down_sets(pred, k):
            if max_width is not None and _has_antichain(full & ~d, comp, max_width):
                continue
            pred.append(d)
            comp.append(d)
            for u in _bits(d):
                comp[u] |= 1 << k
            yield from rec(pred, comp)
            for u in _bits(d):
                comp[u] &= ~(1 << k)
            comp.pop()
            pred.pop()

    yield from rec([], [])


def two_chain_cover(p: Poset) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """Cover ``p`` by at most two chains, or return ``None`` if its width exceeds 2."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    n = p.n
    if n == 0:
        return (), ()
    match = maximum_bipartite_matching(csr_matrix(p.rel.astype(np.int8)), perm_type="column")
    nxt = {u: int(v) for u, v in enumerate(match.tolist()) if v >= 0}
    has_prev = set(nxt.values())
    starts = [v for v in range(n) if v not in has_prev]
    if len(starts) > 2:
        return None
    chains = []
    for s in starts:
        c = [s]
        while c[-1] in nxt:
            c.append(nxt[c[-1]])
        chains.append(tuple(c))
    chains.sort(key=lambda c: (-len(c), c))
    if len(chains) == 1:
        chains.append(())
    return chains[0], chains[1]


def parse_poset(text: str) -> Poset:
    """Parse the ``n <count>`` / ``<u> <v>`` text format (``#`` comments)."""
    n = None
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ValueError(f"line {lineno}: expected 'n <count>'")
            n = int(parts[1])
            if n < 0:
                raise ValueError(f"line {lineno}: negative element count")
            continue
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<u> <v>'")
        pairs.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise ValueError("missing 'n <count>' header")
    return transitive_closure(pairs, n)


def format_poset(p: Poset) -> str:
    lines = [f"n {p.n}"]
    lines += [f"{u} {v}" for u, v in p.pairs()]
    return "\n".join(lines) + "\n"


def read_poset(path) -> Poset:
    with open(path, encoding="utf-8") as fh:
        return parse_poset(fh.read())


def write_poset(p: Poset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_poset(p))
