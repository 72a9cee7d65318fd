"""End-to-end sorters under partial information.

Each sorter is a scikit-learn style estimator.  ``fit(P)`` runs the
preprocessing phase, which never touches a comparison source; ``sort(src)``
runs the query phase and returns a :class:`SortResult`; ``predict(src)``
returns just the recovered order.  A fitted sorter can sort any number of
hidden orders consistent with the poset it was fitted on.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .entropy import (
    BipartiteConvexGraph,
    StabPoint,
    chain_size_entropy,
    convex_bipartite_entropy,
    incomparability_graph,
)
from .exceptions import InternalConsistencyError, NotAnExtensionError
from .merge import binary_insert, execute_schedule, huffman_schedule
from .mupi import MupiEngine, TwoChainCover, mupi
from .oracle import ComparisonSource
from .poset import (
    ChainDecomposition,
    Poset,
    add_chain_relations,
    greedy_chain_decomposition,
    induced_subposet,
    log2_linear_extensions,
    maximum_chain,
    transitive_closure,
)
from .poset import _MASK_LIMIT, _greedy_small

__all__ = [
    "SortResult",
    "FunctionF",
    "function_f",
    "check_poset",
    "InsertionSorter",
    "MergeSorter",
    "CautiousMergeSorter",
    "PreprocessedSorter",
    "insertion_sort_supi",
    "merge_sort_supi",
    "cautious_merge_sort",
    "preprocessed_sort",
    "eps_merge_bound",
    "CAUTIOUS_CONSTANT",
    "SORTERS",
]

CAUTIOUS_CONSTANT = 15.09


@dataclass(frozen=True)
class SortResult:
    order: tuple
    comparisons: int
    bound_value: float | None
    phase_breakdown: dict = field(default_factory=dict)


def check_poset(P) -> Poset:
    """Accept a :class:`Poset` or a square boolean relation matrix (closed on the way in)."""
    if isinstance(P, Poset):
        return P
    rel = np.asarray(P)
    if rel.ndim != 2 or rel.shape[0] != rel.shape[1]:
        raise ValueError(f"expected a square relation matrix, got shape {rel.shape}")
    if rel.dtype != bool:
        if not np.isin(rel, (0, 1)).all():
            raise ValueError("relation matrix entries must be 0/1")
        rel = rel.astype(bool)
    return transitive_closure(zip(*np.nonzero(rel)), rel.shape[0])


def eps_merge_bound(log2_e: float, n: int, eps: float) -> float:
    """``(1+eps) log e(P) + ((1+eps)(log e + log(1 + 1/eps)) + 1) n``."""
    return (1 + eps) * log2_e + ((1 + eps) * (math.log2(math.e) + math.log2(1 + 1 / eps)) + 1) * n


def _chain_result(order, comparisons, bound, **notes) -> SortResult:
    return SortResult(tuple(int(v) for v in order), int(comparisons), bound, dict(notes))


class _Sorter(BaseEstimator):
    """Shared fit/sort plumbing."""

    def __init__(self, bound_guard: int = 16):
        self.bound_guard = bound_guard

    def fit(self, P, y=None):
        self.poset_ = check_poset(P)
        self.n_ = self.poset_.n
        self._preprocess()
        return self

    def _preprocess(self):
        pass

    def _log2_e(self) -> float | None:
        if self.n_ > self.bound_guard:
            return None
        if not hasattr(self, "log2_e_"):
            self.log2_e_ = log2_linear_extensions(self.poset_)
        return self.log2_e_

    def sort(self, src: ComparisonSource) -> SortResult:
        check_is_fitted(self, "poset_")
        start = src.query_count
        if self.n_ <= 1:
            return _chain_result(range(self.n_), 0, 0.0, preprocessing_queries=0)
        res = self._sort(src)
        if src.query_count - start != res.comparisons:
            raise InternalConsistencyError("comparison tally disagrees with the source")
        return res

    def predict(self, src: ComparisonSource) -> tuple:
        return self.sort(src).order

    def fit_predict(self, P, src: ComparisonSource) -> tuple:
        return self.fit(P).predict(src)


class InsertionSorter(_Sorter):
    """Binary insertion of every element into a maximum chain."""

    def _preprocess(self):
        self.chain_ = maximum_chain(self.poset_) if self.n_ else ()
        inside = set(self.chain_)
        self.rest_ = tuple(v for v in range(self.n_) if v not in inside)

    def bound(self) -> float:
        return math.ceil(math.log2(self.n_)) * len(self.rest_) if self.n_ > 1 else 0

    def _sort(self, src):
        chain, q = self.chain_, 0
        for v in self.rest_:
            rep = binary_insert(chain, v, src)
            chain, q = rep.merged, q + rep.comparisons
        return _chain_result(chain, q, self.bound(), preprocessing_queries=0, chain_size=len(self.chain_))


class MergeSorter(_Sorter):
    """Huffman-ordered linear merging of a greedy chain decomposition."""

    def _preprocess(self):
        self.decomposition_ = greedy_chain_decomposition(self.poset_)
        self.schedule_ = huffman_schedule(self.decomposition_.sizes)

    def bound(self) -> float:
        return (chain_size_entropy(self.decomposition_) + 1) * self.n_

    def _sort(self, src):
        rep = execute_schedule(self.decomposition_.chains, self.schedule_, src)
        return _chain_result(
            rep.merged, rep.comparisons, self.bound(), preprocessing_queries=0, chains=len(self.decomposition_)
        )


def _rest_decomposition(p: Poset, chain_a: Sequence[int]):
    inside = set(chain_a)
    rest = tuple(v for v in range(p.n) if v not in inside)
    if not rest:
        return rest, ChainDecomposition(()), ()
    if p.n <= _MASK_LIMIT:
        chains = _greedy_small(p, sum(1 << v for v in rest)).chains
    else:
        local = greedy_chain_decomposition(induced_subposet(p, rest))
        chains = tuple(tuple(rest[i] for i in c) for c in local.chains)
    return rest, ChainDecomposition(chains), huffman_schedule([len(c) for c in chains])


class CautiousMergeSorter(_Sorter):
    """Split off a maximum chain, merge-sort the rest, then merge the two chains under the known relations."""

    def __init__(self, bound_guard: int = 16, strict: bool = False):
        super().__init__(bound_guard)
        self.strict = strict

    def _preprocess(self):
        self.chain_a_ = maximum_chain(self.poset_) if self.n_ else ()
        self.rest_, self.decomposition_, self.schedule_ = _rest_decomposition(self.poset_, self.chain_a_)

    def bound(self) -> float | None:
        le = self._log2_e()
        return None if le is None else CAUTIOUS_CONSTANT * le

    def _sort(self, src):
        q_merge = 0
        chain_b: tuple = ()
        if self.rest_:
            rep = execute_schedule(self.decomposition_.chains, self.schedule_, src)
            chain_b, q_merge = rep.merged, rep.comparisons
        p2 = add_chain_relations(self.poset_, chain_b)
        res = mupi(p2, self.chain_a_, chain_b, src, strict=self.strict)
        return _chain_result(
            res.order,
            q_merge + res.comparisons,
            self.bound(),
            preprocessing_queries=0,
            merge_comparisons=q_merge,
            mupi_comparisons=res.comparisons,
            mupi_bound=res.bound,
            swapped=res.swapped,
        )


@dataclass(frozen=True)
class FunctionF:
    """Maximum weight over every interval ``[c, d]`` of a chain.

    ``self(c, d)`` returns ``(M, c2, d2)``: the maximum ``M`` of the weights
    at positions ``c..d`` and the first and last positions attaining it,
    i.e. the widest sub-interval whose two ends both carry ``M``.
    """

    weights: tuple
    first: tuple
    last: tuple

    def __call__(self, c: int, d: int) -> tuple[Fraction, int, int]:
        if not 0 <= c <= d < len(self.weights):
            raise IndexError(f"interval [{c}, {d}] outside the chain")
        c2, d2 = self.first[c][d - c], self.last[c][d - c]
        return self.weights[c2], c2, d2


def function_f(a: Sequence[int], x) -> FunctionF:
    w = tuple(Fraction(x[v]) for v in a)
    first, last = [], []
    for c in range(len(w)):
        fr, lr = [], []
        m, f, l = None, c, c
        for d in range(c, len(w)):
            if m is None or w[d] > m:
                m, f, l = w[d], d, d
            elif w[d] == m:
                l = d
            fr.append(f)
            lr.append(l)
        first.append(tuple(fr))
        last.append(tuple(lr))
    return FunctionF(w, tuple(first), tuple(last))


@dataclass(frozen=True)
class Phase1Artifacts:
    """Everything the preprocessed sorter computes before its first query."""

    chain_a: tuple
    rest: tuple
    graph: BipartiteConvexGraph
    x: StabPoint
    f: FunctionF
    decomposition: ChainDecomposition
    schedule: tuple
    a_below: tuple
    a_upto: tuple


class PreprocessedSorter(CautiousMergeSorter):
    """Variant whose entropy computation happens entirely before sorting.

    The optimal point is computed for the graph of incomparabilities
    between a maximum chain ``A`` and the rest of the poset.  Once the rest
    has been merge-sorted into a chain ``B``, the point is repaired for the
    thinner graph: tight intervals found with ``f`` are unified, loose
    vertices are raised until tight, and the result is rebalanced before the
    core merging loop runs.
    """

    def _preprocess(self):
        p = self.poset_
        a = maximum_chain(p) if self.n_ else ()
        rest, dec, sched = _rest_decomposition(p, a)
        g = incomparability_graph(p, a, rest)
        _, x = convex_bipartite_entropy(g)
        below = tuple(int(p.rel[list(a), v].sum()) if a else 0 for v in rest)
        upto = tuple(len(a) - (int(p.rel[v, list(a)].sum()) if a else 0) for v in rest)
        self.artifacts_ = Phase1Artifacts(a, rest, g, x, function_f(a, x), dec, sched, below, upto)
        self.chain_a_, self.rest_ = a, rest
        self.decomposition_, self.schedule_ = dec, sched

    def _sort(self, src):
        art = self.artifacts_
        q_start = src.query_count
        q_merge = 0
        chain_b: tuple = ()
        if art.rest:
            rep = execute_schedule(art.decomposition.chains, art.schedule, src)
            chain_b, q_merge = rep.merged, rep.comparisons
        cover, xa, xb = self._repair(chain_b)
        w = dict(zip(cover.chain_a, xa))
        w.update(zip(cover.chain_b, xb))
        e = MupiEngine(cover, w, src, self.strict)
        e.rebalance()
        red, blue = e.red_contribution()
        swapped = red > blue
        if swapped:
            e = MupiEngine(cover.swapped(), e.point(), src, self.strict)
        h = e.entropy()
        if self.strict:
            e.check()
        order = e.run_core()
        return _chain_result(
            order,
            q_merge + e.comparisons,
            self.bound(),
            preprocessing_queries=q_start,
            merge_comparisons=q_merge,
            mupi_comparisons=e.comparisons,
            mupi_bound=3 * self.n_ * h,
            swapped=swapped,
        )

    def _repair(self, chain_b):
        """Updated cover plus weights free of inlays and loose vertices."""
        art = self.artifacts_
        a = art.chain_a
        pa = len(a)
        where = {v: k for k, v in enumerate(art.rest)}
        # bounds of B elements over A positions after B became a chain
        lo_b, hi_b, m = [], [], 0
        for v in chain_b:
            m = max(m, art.a_below[where[v]])
            lo_b.append(m)
        m = pa
        for v in reversed(chain_b):
            m = min(m, art.a_upto[where[v]])
            hi_b.append(m)
        hi_b.reverse()
        lo = [bisect_right(hi_b, i) for i in range(pa)]
        hi = [bisect_right(lo_b, i) for i in range(pa)]
        cover = TwoChainCover.from_bounds(a, chain_b, lo, hi)

        xa = [art.x[v] for v in a]
        xb = [art.x[v] for v in chain_b]
        f = art.f

        tight = []
        for j in range(len(chain_b)):
            c, d = lo_b[j], hi_b[j] - 1
            if c <= d:
                mx, c2, d2 = f(c, d)
                if xb[j] + mx == 1:
                    tight.append((c2, d2, j))
        tight.sort()
        groups = []
        for c2, d2, j in tight:
            if groups and c2 <= groups[-1][1]:
                g = groups[-1]
                g[1] = max(g[1], d2)
                g[2] = min(g[2], j)
                g[3] = max(g[3], j)
            else:
                groups.append([c2, d2, j, j])
        for u, u2, v, v2 in groups:
            top = xb[v]
            if not (xb[v2] == top and xa[u] == 1 - top and xa[u2] == 1 - top):
                raise InternalConsistencyError("tight interval ends carry different weights")
            if any(xb[j] > top for j in range(v, v2 + 1)) or any(xa[i] > 1 - top for i in range(u, u2 + 1)):
                raise InternalConsistencyError("weight inside a tight interval exceeds its ends")
            for j in range(v, v2 + 1):
                xb[j] = top
            for i in range(u, u2 + 1):
                xa[i] = 1 - top

        starts = [g[0] for g in groups]

        def max_a(c, d):
            """Largest current A weight on positions ``c..d``."""
            best = Fraction(0)
            i = c
            k = bisect_right(starts, c) - 1
            if k >= 0 and groups[k][1] < c:
                k += 1
            k = max(k, 0)
            while i <= d:
                if k < len(groups) and groups[k][0] <= i:
                    best = max(best, xa[groups[k][0]])
                    i = groups[k][1] + 1
                    k += 1
                    continue
                stop = d if k >= len(groups) else min(d, groups[k][0] - 1)
                best = max(best, f(i, stop)[0])
                i = stop + 1
            return best

        for j in range(len(chain_b)):
            c, d = lo_b[j], hi_b[j] - 1
            mx = max_a(c, d) if c <= d else Fraction(0)
            if xb[j] + mx < 1:
                xb[j] = 1 - mx
        for i in range(pa):
            r = range(lo[i], hi[i])
            mx = max((xb[j] for j in r), default=Fraction(0))
            if xa[i] + mx < 1:
                xa[i] = 1 - mx
        return cover, xa, xb


def insertion_sort_supi(p: Poset, src: ComparisonSource) -> SortResult:
    return InsertionSorter().fit(p).sort(src)


def merge_sort_supi(p: Poset, src: ComparisonSource) -> SortResult:
    return MergeSorter().fit(p).sort(src)


def cautious_merge_sort(p: Poset, src: ComparisonSource, strict: bool = False) -> SortResult:
    return CautiousMergeSorter(strict=strict).fit(p).sort(src)


def preprocessed_sort(p: Poset, src: ComparisonSource, strict: bool = False) -> SortResult:
    return PreprocessedSorter(strict=strict).fit(p).sort(src)


SORTERS = {
    "insertion": InsertionSorter,
    "merge": MergeSorter,
    "cautious": CautiousMergeSorter,
    "preprocessed": PreprocessedSorter,
}
