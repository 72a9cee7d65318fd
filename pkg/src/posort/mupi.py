"""Merging two chains under partial information.

The incomparability graph of a poset covered by two chains ``A`` and ``B``
is bipartite and biconvex, so the engine never stores edges.  For each
``a_i`` it keeps ``lo[i]`` (how many ``B`` elements are known to be below
``a_i``) and ``hi[i]`` (position of the first ``B`` element known to be
above it); ``a_i`` is incomparable exactly to ``b_lo[i] .. b_{hi[i]-1}``.
Both arrays are non-decreasing, which also makes every ``B`` neighbourhood
an interval of ``A``.

Vertex weights live on components of the tight-edge graph ``G(x)``: all
``A`` members of a component share the weight ``t`` and all ``B`` members
share ``1 - t``.  Vertices known to be comparable to everything are
cut-points; they carry weight 1, belong to no component and are written
straight to the output.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from gmpy2 import mpq

from .entropy import BipartiteConvexGraph, StabPoint, convex_bipartite_entropy, log2_fraction
from .exceptions import InternalConsistencyError, InvalidCoverError, StructureError
from .merge import hwang_lin_merge
from .oracle import ComparisonSource
from .poset import Poset

__all__ = [
    "TwoChainCover",
    "Component",
    "TightComponents",
    "MupiResult",
    "MupiEngine",
    "build_two_chain_cover",
    "build_tight_components",
    "slack",
    "rebalance",
    "red_contribution",
    "mupi_core",
    "mupi",
]

HALF = mpq(1, 2)
ONE = mpq(1)


@dataclass(frozen=True)
class TwoChainCover:
    """Two chains covering a poset and their incomparability intervals.

    ``inc_a[i] = (s, e)`` lists the ``B`` positions ``s..e`` incomparable to
    ``a_i`` (inclusive).  For an empty interval ``e = s - 1`` and ``s`` is
    still the number of ``B`` elements below ``a_i``; ``inc_b`` is the
    symmetric table over ``A`` positions.
    """

    chain_a: tuple
    chain_b: tuple
    inc_a: tuple
    inc_b: tuple

    @classmethod
    def from_bounds(cls, chain_a, chain_b, lo: Sequence[int], hi: Sequence[int]) -> "TwoChainCover":
        """Build from ``lo``/``hi`` arrays over ``A`` (see the module docstring)."""
        lo, hi = list(lo), list(hi)
        inc_a = tuple((lo[i], hi[i] - 1) for i in range(len(chain_a)))
        inc_b = tuple(
            (bisect_right(hi, j), bisect_right(lo, j) - 1) for j in range(len(chain_b))
        )
        return cls(tuple(chain_a), tuple(chain_b), inc_a, inc_b)

    @property
    def n(self) -> int:
        return len(self.chain_a) + len(self.chain_b)

    def bounds(self) -> tuple[list[int], list[int]]:
        return [s for s, _ in self.inc_a], [e + 1 for _, e in self.inc_a]

    def graph(self) -> BipartiteConvexGraph:
        return BipartiteConvexGraph(self.chain_a, self.chain_b, self.inc_b)

    def swapped(self) -> "TwoChainCover":
        return TwoChainCover(self.chain_b, self.chain_a, self.inc_b, self.inc_a)


def build_two_chain_cover(p: Poset, a: Sequence[int], b: Sequence[int]) -> TwoChainCover:
    """Incomparability intervals of a two-chain cover, by monotone scans."""
    a, b = tuple(a), tuple(b)
    if sorted(a + b) != list(range(p.n)):
        raise InvalidCoverError("chains do not partition the ground set")
    for c in (a, b):
        for u, v in zip(c, c[1:]):
            if not p.less(u, v):
                raise InvalidCoverError(f"{c} is not a chain of the poset")
    lo, hi = [], []
    j = 0
    for u in a:
        while j < len(b) and p.less(b[j], u):
            j += 1
        lo.append(j)
    j = 0
    for u in a:
        j = max(j, lo[len(hi)])
        while j < len(b) and not p.less(u, b[j]):
            j += 1
        hi.append(j)
    return TwoChainCover.from_bounds(a, b, lo, hi)


@dataclass(frozen=True)
class Component:
    """Snapshot of a component of ``G(x)``; ranges are inclusive positions."""

    a_range: tuple | None
    b_range: tuple | None
    xa: Fraction
    xb: Fraction
    na: int
    nb: int

    @property
    def color(self) -> str:
        return "red" if self.na >= self.nb else "blue"

    @property
    def balanced(self) -> bool:
        return self.xa == Fraction(self.na, self.na + self.nb)

    @property
    def trivial(self) -> bool:
        return self.na + self.nb == 1


@dataclass(frozen=True)
class TightComponents:
    """Non-trivial components of ``G(x)`` in poset order, plus side lists.

    ``g_components`` holds the non-trivial components of ``G`` itself as
    ``(a_range, b_range)`` pairs; ``unbalanced`` and ``good`` index into
    ``comps`` (good ones red first).
    """

    comps: tuple
    g_components: tuple
    unbalanced: tuple
    good: tuple


@dataclass(frozen=True)
class MupiResult:
    order: tuple
    comparisons: int
    entropy: float
    swapped: bool
    iterations: int

    @property
    def bound(self) -> float:
        """``3 n H(x)`` for the point the core loop started from."""
        return 3 * len(self.order) * self.entropy


class _Comp:
    __slots__ = ("a", "b", "t", "alive", "_target")

    def __init__(self, a, b, t):
        self.a = a
        self.b = b
        self.t = t
        self.alive = True
        self._target = mpq(len(a), len(a) + len(b))

    def target(self) -> mpq:
        return self._target

    def red(self) -> bool:
        return len(self.a) >= len(self.b)

    def __repr__(self):
        return f"_Comp(a={self.a}, b={self.b}, t={self.t})"


def _frac(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


def _q(v) -> mpq:
    return mpq(int(v.numerator), int(v.denominator))


def _contiguous(pos: list) -> bool:
    return not pos or pos[-1] - pos[0] + 1 == len(pos)


class MupiEngine:
    """Mutable state of one merge under partial information.

    With ``strict=True`` every structural claim the algorithm relies on is
    re-checked after each step and a violation raises
    :class:`~posort.exceptions.InternalConsistencyError`.
    """

    def __init__(self, cover: TwoChainCover, x: Mapping, src: ComparisonSource | None = None, strict: bool = False):
        self.cover = cover
        self.A, self.B = cover.chain_a, cover.chain_b
        self.lo, self.hi = cover.bounds()
        self.n = cover.n
        self.eps = mpq(1, 2 * self.n) if self.n else mpq(0)
        self.src = src
        self.strict = strict
        self.comparisons = 0
        self.iterations = 0
        self.out: list = [None] * self.n
        self.emitted = 0
        self.comp_a: list = [None] * len(self.A)
        self.comp_b: list = [None] * len(self.B)
        self._init_components(x)

    # ------------------------------------------------------------------ graph
    def nbr_a(self, i: int) -> range:
        return range(self.lo[i], self.hi[i])

    def nbr_b(self, j: int) -> range:
        return range(bisect_right(self.hi, j), bisect_right(self.lo, j))

    def xa(self, i: int) -> mpq:
        c = self.comp_a[i]
        return ONE if c is None else c.t

    def xb(self, j: int) -> mpq:
        c = self.comp_b[j]
        return ONE if c is None else 1 - c.t

    def point(self) -> StabPoint:
        w = {v: self.xa(i) for i, v in enumerate(self.A)}
        w.update({v: self.xb(j) for j, v in enumerate(self.B)})
        return StabPoint(w)

    def entropy(self) -> float:
        if not self.n:
            return 0.0
        s = sum(log2_fraction(self.xa(i)) for i in range(len(self.A)))
        s += sum(log2_fraction(self.xb(j)) for j in range(len(self.B)))
        return -s / self.n

    def components(self) -> list[_Comp]:
        """Live components with at least one member on each side, in poset order."""
        seen, out = set(), []
        for c in self.comp_a:
            if c is not None and c.b and id(c) not in seen:
                seen.add(id(c))
                out.append(c)
        return out

    def _all_components(self) -> list[_Comp]:
        seen, out = set(), []
        for c in self.comp_a + self.comp_b:
            if c is not None and id(c) not in seen:
                seen.add(id(c))
                out.append(c)
        return out

    # ---------------------------------------------------------- construction
    def _init_components(self, x: Mapping):
        na, nb = len(self.A), len(self.B)
        wa = [_q(x[v]) for v in self.A]
        wb = [_q(x[v]) for v in self.B]
        for w in wa + wb:
            if not 0 < w <= 1:
                raise StructureError("weights must lie in (0, 1]")
        parent = list(range(na + nb))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        for i in range(na):
            for j in self.nbr_a(i):
                s = wa[i] + wb[j]
                if s > 1:
                    raise StructureError(f"edge ({self.A[i]}, {self.B[j]}) violates feasibility")
                if s == 1:
                    parent[find(i)] = find(na + j)
        groups: dict[int, tuple[list, list]] = {}
        for i in range(na):
            groups.setdefault(find(i), ([], []))[0].append(i)
        for j in range(nb):
            groups.setdefault(find(na + j), ([], []))[1].append(j)
        for a, b in groups.values():
            t = wa[a[0]] if a else 1 - wb[b[0]]
            if any(wa[i] != t for i in a) or any(wb[j] != 1 - t for j in b):
                raise StructureError("weights are not constant on a tight component")
            c = _Comp(a, b, t)
            for i in a:
                self.comp_a[i] = c
            for j in b:
                self.comp_b[j] = c
        for c in self._all_components():
            if self._is_cut_point(c):
                self._emit(c)

    # ------------------------------------------------------------ cut-points
    def _is_cut_point(self, c: _Comp) -> bool:
        if len(c.a) + len(c.b) != 1 or c.t != c.target():
            return False
        return not (self.nbr_a(c.a[0]) if c.a else self.nbr_b(c.b[0]))

    def _emit(self, c: _Comp):
        c.alive = False
        if c.a:
            i = c.a[0]
            if self.lo[i] != self.hi[i]:
                raise InternalConsistencyError("emitting a vertex that still has neighbours")
            rank, v = i + self.lo[i], self.A[i]
            self.comp_a[i] = None
        else:
            j = c.b[0]
            below = bisect_right(self.hi, j)
            if below != bisect_right(self.lo, j):
                raise InternalConsistencyError("emitting a vertex that still has neighbours")
            rank, v = j + below, self.B[j]
            self.comp_b[j] = None
        if self.out[rank] is not None:
            raise InternalConsistencyError(f"rank {rank} filled twice")
        self.out[rank] = v
        self.emitted += 1

    # ------------------------------------------------------------- rebalance
    def _outside_max(self, c: _Comp, from_a: bool):
        """Largest weight across non-tight edges leaving ``c`` and the components attaining it."""
        best, hits = None, []
        members = c.a if from_a else c.b
        cur = 0
        for u in members:
            r = self.nbr_a(u) if from_a else self.nbr_b(u)
            k, stop = max(r.start, cur), r.stop
            cur = max(cur, stop)
            while k < stop:
                d = self.comp_b[k] if from_a else self.comp_a[k]
                if d is c:
                    k += 1
                    continue
                w = (1 - d.t) if from_a else d.t
                if best is None or w > best:
                    best, hits = w, [d]
                elif w == best and d not in hits:
                    hits.append(d)
                side = d.b if from_a else d.a
                k = side[-1] + 1 if _contiguous(side) and side[0] <= k else k + 1
        return best, hits

    def slack(self, c: _Comp) -> tuple[mpq, list]:
        """Signed shift of ``c``'s A-weight and the components it becomes tight with."""
        delta = c.target() - c.t
        if delta == 0:
            return mpq(0), []
        if delta > 0:
            mx, hits = self._outside_max(c, True)
            cap = None if mx is None else 1 - c.t - mx
        else:
            mx, hits = self._outside_max(c, False)
            cap = None if mx is None else c.t - mx
        if cap is not None and cap <= 0:
            raise InternalConsistencyError("non-positive slack cap on a non-tight boundary")
        if cap is None or cap > abs(delta):
            return delta, []
        return (cap if delta > 0 else -cap), hits

    def _step(self, c: _Comp) -> _Comp:
        sigma, hits = self.slack(c)
        c.t += sigma
        if not hits:
            return c
        a, b = list(c.a), list(c.b)
        for d in hits:
            d.alive = False
            a.extend(d.a)
            b.extend(d.b)
        c.alive = False
        m = _Comp(sorted(a), sorted(b), c.t)
        for i in m.a:
            self.comp_a[i] = m
        for j in m.b:
            self.comp_b[j] = m
        return m

    def rebalance(self, work=None):
        """Shift unbalanced components until every component is balanced."""
        queue = deque(work if work is not None else self._all_components())
        while queue:
            c = queue.popleft()
            if not c.alive or c.t == c.target():
                continue
            h0 = self.entropy() if self.strict else None
            c = self._step(c)
            if self._is_cut_point(c):
                self._emit(c)
            elif c.t != c.target():
                queue.append(c)
            if self.strict:
                self._check_feasible()
                if self.entropy() > h0 + 1e-9:
                    raise InternalConsistencyError("rebalancing increased the entropy")

    # --------------------------------------------------------------- colours
    def red_contribution(self) -> tuple[float, float]:
        red = blue = 0.0
        for c in self.components():
            h = -(len(c.a) * log2_fraction(c.t) + len(c.b) * log2_fraction(1 - c.t)) / self.n
            if c.red():
                red += h
            else:
                blue += h
        return red, blue

    def is_good(self, c: _Comp) -> bool:
        red = c.red()
        small = c.b if red else c.a
        for u in small:
            for k in self.nbr_b(u) if red else self.nbr_a(u):
                d = self.comp_a[k] if red else self.comp_b[k]
                if d is c:
                    continue
                if d is None or d.red() == red:
                    return False
        return True

    def pick_good(self) -> _Comp | None:
        comps = self.components()
        if not comps:
            return None
        for want_red in (True, False):
            for c in comps:
                if c.red() == want_red and self.is_good(c):
                    return c
        raise InternalConsistencyError("no good component exists")

    # ------------------------------------------------------------- core loop
    def locally_optimal(self) -> bool:
        return all(c.t == c.target() for c in self._all_components())

    def merge_component(self, c: _Comp):
        X = [self.A[i] for i in c.a]
        Y = [self.B[j] for j in c.b]
        rep = hwang_lin_merge(X, Y, self.src)
        self.comparisons += rep.comparisons
        pos_a = {v: i for i, v in zip(c.a, X)}
        below = 0
        rank = {}
        for r, v in enumerate(rep.merged):
            rank[v] = r
            if v in pos_a:
                i = pos_a[v]
                if below:
                    self.lo[i] = max(self.lo[i], c.b[below - 1] + 1)
                if below < len(c.b):
                    self.hi[i] = min(self.hi[i], c.b[below])
            else:
                below += 1
        for i in range(1, len(self.lo)):
            if self.lo[i] < self.lo[i - 1]:
                self.lo[i] = self.lo[i - 1]
        for i in range(len(self.hi) - 2, -1, -1):
            if self.hi[i] > self.hi[i + 1]:
                self.hi[i] = self.hi[i + 1]
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise InternalConsistencyError("oracle answers contradict the known relations")

        c.alive = False
        lifted = []
        for i in c.a:
            s = _Comp([i], [], max(c.t, HALF))
            self.comp_a[i] = s
            lifted.append((rank[self.A[i]], s, self.nbr_a(i), c.b))
        for j in c.b:
            s = _Comp([], [j], 1 - max(1 - c.t, HALF + self.eps))
            self.comp_b[j] = s
            lifted.append((rank[self.B[j]], s, self.nbr_b(j), c.a))
        middle, low, high = [], [], []
        for r, s, nb, other in lifted:
            if not nb:
                middle.append((r, s))
            elif nb.stop <= other[0]:
                low.append((r, s))
            elif nb.start > other[-1]:
                high.append((r, s))
            else:
                raise InternalConsistencyError("merged vertex still straddles its component")
        order = [s for _, s in sorted(middle, key=lambda e: e[0])]
        order += [s for _, s in sorted(low, key=lambda e: e[0])]
        order += [s for _, s in sorted(high, key=lambda e: -e[0])]
        if self.strict:
            self._check_color_consistent()
        self.rebalance(order)

    def run_core(self) -> list:
        if not self.locally_optimal():
            raise StructureError("the core loop needs a locally optimal point")
        h_prev = self.entropy()
        while True:
            c = self.pick_good()
            if c is None:
                break
            self.iterations += 1
            self.merge_component(c)
            if self.strict:
                h = self.entropy()
                if h > h_prev + 1e-9:
                    raise InternalConsistencyError("entropy increased across an iteration")
                h_prev = h
                self.check()
        if self.emitted != self.n or any(v is None for v in self.out):
            raise InternalConsistencyError("core loop ended with unplaced vertices")
        return self.out

    # ---------------------------------------------------------------- checks
    def _check_feasible(self):
        for i in range(len(self.A)):
            xi = self.xa(i)
            if not 0 < xi <= 1:
                raise InternalConsistencyError("weight left (0, 1]")
            for j in self.nbr_a(i):
                if xi + self.xb(j) > 1:
                    raise InternalConsistencyError(f"edge ({self.A[i]}, {self.B[j]}) infeasible")

    def _check_color_consistent(self):
        for c in self._all_components():
            ta, tb = c.t, 1 - c.t
            if c.red():
                ok = (not c.a or ta >= HALF) and (not c.b or tb <= HALF)
            else:
                ok = (not c.a or ta < HALF) and (not c.b or tb > HALF)
            if not ok:
                raise InternalConsistencyError(f"colour inconsistent component {c}")

    def check(self):
        """Feasibility, local optimality, colour consistency, component structure."""
        self._check_feasible()
        if not self.locally_optimal():
            raise InternalConsistencyError("point is not locally optimal")
        self._check_color_consistent()
        fresh = MupiEngine.__new__(MupiEngine)
        fresh.A, fresh.B, fresh.lo, fresh.hi, fresh.n = self.A, self.B, self.lo, self.hi, self.n
        fresh.comp_a = [None] * len(self.A)
        fresh.comp_b = [None] * len(self.B)
        fresh.out = [None] * self.n
        fresh.emitted = 0
        fresh._init_components(self.point())

        def partition(e):
            return sorted((tuple(c.a), tuple(c.b)) for c in e._all_components() if c.alive)

        if partition(fresh) != partition(self):
            raise InternalConsistencyError("stored components differ from the tight-edge graph")
        comps = self.components()
        for c in comps:
            if not (_contiguous(c.a) and _contiguous(c.b)):
                raise InternalConsistencyError(f"component {c} has an inlay")
        for c, d in zip(comps, comps[1:]):
            if not (c.a[-1] < d.a[0] and c.b[-1] < d.b[0]):
                raise InternalConsistencyError("components are not ordered by the poset")
        if self.n <= 40:
            self._check_crossing()

    def _check_crossing(self):
        tight = [
            (i, j) for i in range(len(self.A)) for j in self.nbr_a(i) if self.xa(i) + self.xb(j) == 1
        ]
        tset = set(tight)
        for i, j in tight:
            for i2, j2 in tight:
                if i < i2 and j2 < j and ((i, j2) not in tset or (i2, j) not in tset):
                    raise InternalConsistencyError("crossing tight edges without tight diagonals")

    # ------------------------------------------------------------- snapshots
    def snapshot(self) -> TightComponents:
        comps = sorted(self.components(), key=lambda c: c.a[0])
        snap = tuple(
            Component((c.a[0], c.a[-1]), (c.b[0], c.b[-1]), _frac(c.t), _frac(1 - c.t), len(c.a), len(c.b)) for c in comps
        )
        unbalanced = tuple(k for k, c in enumerate(comps) if c.t != c.target())
        good = []
        if not unbalanced:
            good = [k for k, c in enumerate(comps) if c.red() and self.is_good(c)]
            good += [k for k, c in enumerate(comps) if not c.red() and self.is_good(c)]
        return TightComponents(snap, tuple(self._g_components()), unbalanced, tuple(good))

    def _g_components(self) -> list:
        """Non-trivial components of ``G`` as pairs of inclusive ranges."""
        out = []
        i, na = 0, len(self.A)
        while i < na:
            if self.lo[i] == self.hi[i]:
                i += 1
                continue
            a0, b0, b1 = i, self.lo[i], self.hi[i]
            while i + 1 < na and self.lo[i + 1] < b1 and self.lo[i + 1] < self.hi[i + 1]:
                i += 1
                b1 = max(b1, self.hi[i])
            out.append(((a0, i), (b0, b1 - 1)))
            i += 1
        return out


def _engine(g: TwoChainCover, x: Mapping, src=None, strict=False) -> MupiEngine:
    return MupiEngine(g, x, src, strict)


def build_tight_components(g: TwoChainCover, x: Mapping) -> TightComponents:
    """Components of ``G(x)``; loose vertices or inlays raise :class:`StructureError`."""
    e = _engine(g, x)
    for c in e._all_components():
        if len(c.a) + len(c.b) == 1:
            raise StructureError(f"loose vertex in component {c}")
    for c in e.components():
        if not (_contiguous(c.a) and _contiguous(c.b)):
            raise StructureError(f"component {c} has an inlay")
    return e.snapshot()


def _find(e: MupiEngine, k: Component) -> _Comp:
    for c in e._all_components():
        if c.a and (c.a[0], c.a[-1]) == k.a_range and (c.b[0], c.b[-1]) == k.b_range:
            return c
    raise StructureError("component not found")


def slack(k: Component, tc: TightComponents, g: TwoChainCover, x: Mapping) -> Fraction:
    e = _engine(g, x)
    return _frac(e.slack(_find(e, k))[0])


def rebalance(g: TwoChainCover, x: Mapping, tc: TightComponents | None = None, strict: bool = False):
    e = _engine(g, x, strict=strict)
    e.rebalance()
    return e.point(), e.snapshot()


def red_contribution(x: Mapping, tc: TightComponents, n: int) -> tuple[float, float]:
    red = blue = 0.0
    for c in tc.comps:
        h = -(c.na * log2_fraction(c.xa) + c.nb * log2_fraction(c.xb)) / n
        if c.color == "red":
            red += h
        else:
            blue += h
    return red, blue


def mupi_core(g: TwoChainCover, x: Mapping, src: ComparisonSource, strict: bool = False) -> MupiResult:
    """Merge the two chains of ``g`` starting from a locally optimal point ``x``."""
    e = _engine(g, x, src, strict)
    h = e.entropy()
    if strict:
        e.check()
    order = e.run_core()
    return MupiResult(tuple(order), e.comparisons, h, False, e.iterations)


def mupi(p: Poset, a: Sequence[int], b: Sequence[int], src: ComparisonSource, strict: bool = False) -> MupiResult:
    """Merge chains ``a`` and ``b`` of ``p`` using an entropy-minimising point."""
    g = build_two_chain_cover(p, a, b)
    _, x = convex_bipartite_entropy(g.graph())
    e = _engine(g, x, src, strict)
    red, blue = e.red_contribution()
    swapped = red > blue
    if swapped:
        e = _engine(g.swapped(), x, src, strict)
    h = e.entropy()
    if strict:
        e.check()
    order = e.run_core()
    return MupiResult(tuple(order), e.comparisons, h, swapped, e.iterations)
