"""Bound-verification sweeps.

Every sweep returns :class:`CheckSummary` objects that count runs and
collect violations (``value > bound + tol``).  Exhaustive sweeps walk the
naturally labelled posets with the identity as hidden order, which meets
every (poset, linear extension) pair up to relabelling exactly once per
labelling; :func:`sweep_random_extensions` instead runs every linear
extension of random closures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .entropy import (
    BipartiteConvexGraph,
    convex_bipartite_entropy,
    incomparability_graph,
    km_partition_bruteforce,
)
from .merge import hwang_lin_merge
from .mupi import mupi
from .oracle import HiddenOrderOracle
from .poset import (
    Poset,
    count_linear_extensions,
    linear_extensions,
    natural_posets,
    random_linear_extension,
    random_poset,
    random_two_chain_poset,
    two_chain_cover,
)
from .sorters import (
    CAUTIOUS_CONSTANT,
    CautiousMergeSorter,
    InsertionSorter,
    MergeSorter,
    PreprocessedSorter,
    eps_merge_bound,
)

__all__ = [
    "CheckSummary",
    "TOL",
    "MAX_VERIFY_N",
    "sweep_sorters",
    "sweep_random_extensions",
    "sweep_width2_entropy",
    "biconvex_graphs",
    "sweep_entropy_oracle",
    "sweep_mupi_random",
    "sweep_mupi_exhaustive",
    "fuzz_merge_sort",
    "fuzz_hwang_lin",
    "verify_all",
]

TOL = 1e-9
MAX_VERIFY_N = 10
LOG2E = math.log2(math.e)
MERGE_EPS = (0.35, 1.0)
# Violations kept verbatim per check; the count is always exact.
_KEEP = 20


@dataclass
class CheckSummary:
    name: str
    instances: int = 0
    runs: int = 0
    violation_count: int = 0
    violations: list = field(default_factory=list)
    worst_margin: float = -math.inf

    def record(self, value: float, bound: float, tol: float = TOL, **info) -> bool:
        """Count one run; ``value <= bound + tol`` passes."""
        self.runs += 1
        margin = value - bound
        if margin > self.worst_margin:
            self.worst_margin = margin
        if margin > tol:
            self.violation_count += 1
            if len(self.violations) < _KEEP:
                self.violations.append({"value": value, "bound": bound, **info})
            return False
        return True

    def fail(self, **info) -> None:
        self.runs += 1
        self.violation_count += 1
        if len(self.violations) < _KEEP:
            self.violations.append(info)

    def ok(self) -> None:
        self.runs += 1

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "runs": self.runs,
            "violations": self.violation_count,
            "worst_margin": None if self.worst_margin == -math.inf else self.worst_margin,
            "examples": self.violations,
        }

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.instances} instances, {self.runs} runs, {self.violation_count} violations"


def _summaries(*names: str) -> dict[str, CheckSummary]:
    return {k: CheckSummary(k) for k in names}


SORTER_CHECKS = (
    "correctness",
    "insertion_bound",
    "merge_chain_entropy_bound",
    "merge_eps_bound_eps0.35",
    "merge_eps_bound_eps1.0",
    "cautious_bound",
    "preprocessed_bound",
    "preprocessed_phase1_queries",
)


class _FittedSorters:
    """The four sorters fitted on one poset, plus its ``log2 e(P)``."""

    def __init__(self, p: Poset, log2_e: float):
        self.p = p
        self.log2_e = log2_e
        self.ins = InsertionSorter(bound_guard=0).fit(p)
        self.mer = MergeSorter(bound_guard=0).fit(p)
        self.cau = CautiousMergeSorter(bound_guard=0).fit(p)
        self.pre = PreprocessedSorter(bound_guard=0).fit(p)

    def run(self, order, out: dict[str, CheckSummary]) -> None:
        n, le = self.p.n, self.log2_e
        want = tuple(order)
        info = {"n": n, "relations": self.p.pairs() if n <= 12 else None, "order": want}
        results = {}
        for name, s in (("insertion", self.ins), ("merge", self.mer), ("cautious", self.cau), ("preprocessed", self.pre)):
            results[name] = s.sort(HiddenOrderOracle(want))
        bad = [k for k, r in results.items() if r.order != want]
        if bad:
            out["correctness"].fail(sorters=bad, **info)
        else:
            out["correctness"].ok()
        ins = results["insertion"]
        out["insertion_bound"].record(ins.comparisons, self.ins.bound() if n > 1 else 0, **info)
        mer = results["merge"]
        out["merge_chain_entropy_bound"].record(mer.comparisons, self.mer.bound() if n > 1 else 0, **info)
        for eps in MERGE_EPS:
            out[f"merge_eps_bound_eps{eps}"].record(mer.comparisons, eps_merge_bound(le, n, eps), **info)
        out["cautious_bound"].record(results["cautious"].comparisons, CAUTIOUS_CONSTANT * le, **info)
        pre = results["preprocessed"]
        out["preprocessed_bound"].record(pre.comparisons, CAUTIOUS_CONSTANT * le, **info)
        out["preprocessed_phase1_queries"].record(pre.phase_breakdown.get("preprocessing_queries", 0), 0, **info)


def sweep_sorters(max_n: int, min_n: int = 0, posets: Callable[[int], Iterable[Poset]] = natural_posets) -> dict[str, CheckSummary]:
    """All four sorters on every naturally labelled poset, identity hidden order."""
    out = _summaries(*SORTER_CHECKS)
    for n in range(min_n, max_n + 1):
        ident = tuple(range(n))
        for p in posets(n):
            fs = _FittedSorters(p, math.log2(count_linear_extensions(p)))
            fs.run(ident, out)
            for s in out.values():
                s.instances += 1
    return out


def _random_closures(count: int, max_n: int, density: tuple[float, float], seed) -> Iterator[Poset]:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        d = float(rng.uniform(*density))
        yield random_poset(n, d, seed=int(rng.integers(2**63)))


def sweep_random_extensions(
    count: int = 5000, max_n: int = 8, density: tuple[float, float] = (0.3, 1.0), seed=0
) -> dict[str, CheckSummary]:
    """Every linear extension of ``count`` random closures as hidden order."""
    out = _summaries(*SORTER_CHECKS)
    for p in _random_closures(count, max_n, density, seed):
        fs = _FittedSorters(p, math.log2(count_linear_extensions(p)))
        for order in linear_extensions(p):
            fs.run(order, out)
        for s in out.values():
            s.instances += 1
    return out


def sweep_width2_entropy(max_n: int) -> dict[str, CheckSummary]:
    """``log e(P) <= nH <= 2 log e(P)`` and ``nH <= log e(P) + n log e`` on width-2 posets."""
    out = _summaries("entropy_lower", "entropy_upper", "entropy_additive")
    for n in range(1, max_n + 1):
        for p in natural_posets(n, max_width=2):
            a, b = two_chain_cover(p)
            part, _ = convex_bipartite_entropy(incomparability_graph(p, a, b))
            nh = n * part.entropy
            le = math.log2(count_linear_extensions(p))
            info = {"n": n, "relations": p.pairs()}
            out["entropy_lower"].record(le, nh, **info)
            out["entropy_upper"].record(nh, 2 * le, **info)
            out["entropy_additive"].record(nh, le + n * LOG2E, **info)
            for s in out.values():
                s.instances += 1
    return out


def biconvex_graphs(max_a: int, max_b: int) -> Iterator[BipartiteConvexGraph]:
    """Biconvex bipartite graphs with ``|A| <= max_a`` and ``|B| <= max_b``.

    ``A`` keeps its order (it witnesses convexity) while ``B`` is taken as
    a multiset of intervals, since relabelling ``B`` does not change the
    graph.  Mirror images along ``A`` are produced once.
    """
    for ma in range(max_a + 1):
        ivs = [(0, -1)] + [(i, j) for i in range(ma) for j in range(i, ma)]
        for mb in range(max_b + 1):
            seen = set()
            for nbr in _biconvex_sequences(ma, mb, ivs):
                key = tuple(sorted(nbr))
                mirror = tuple(sorted((ma - 1 - j, ma - 1 - i) if i <= j else (0, -1) for i, j in key))
                key = min(key, mirror)
                if key in seen:
                    continue
                seen.add(key)
                yield BipartiteConvexGraph(tuple(range(ma)), tuple(range(ma, ma + mb)), key)


def _biconvex_sequences(ma: int, mb: int, ivs) -> Iterator[tuple]:
    # Per A vertex: 0 untouched, 1 adjacent to the latest B vertex, 2 closed.
    seq: list = []

    def rec(state: tuple):
        if len(seq) == mb:
            yield tuple(seq)
            return
        for iv in ivs:
            i, j = iv
            ns = list(state)
            for a in range(ma):
                s = state[a]
                if i <= a <= j:
                    if s == 2:
                        break
                    ns[a] = 1
                elif s == 1:
                    ns[a] = 2
            else:
                seq.append(iv)
                yield from rec(tuple(ns))
                seq.pop()

    yield from rec((0,) * ma)


def _random_convex_graphs(count: int, seed) -> Iterator[BipartiteConvexGraph]:
    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        n = int(rng.integers(2, 25))
        p, a, b = random_two_chain_poset(n, seed=int(rng.integers(2**63)))
        if len(a) > 15 or len(b) > 15:
            continue
        made += 1
        yield incomparability_graph(p, a, b)


def _same_partition(g: BipartiteConvexGraph, tol: float) -> tuple[bool, dict]:
    fast, _ = convex_bipartite_entropy(g)
    slow = km_partition_bruteforce(g)
    same_ratios = sorted(fast.ratios()) == sorted(slow.ratios())
    diff = abs(fast.entropy - slow.entropy)
    return same_ratios and diff <= tol, {"nbr": g.nbr, "ma": len(g.side_a), "diff": diff}


def sweep_entropy_oracle(max_side: int = 6, random_count: int = 500, seed=0, tol: float = 1e-12) -> dict[str, CheckSummary]:
    """Convex Körner–Marton against exhaustive subset search."""
    out = _summaries("entropy_oracle_exhaustive", "entropy_oracle_random")
    for key, graphs in (
        ("entropy_oracle_exhaustive", biconvex_graphs(max_side, max_side)),
        ("entropy_oracle_random", _random_convex_graphs(random_count, seed)),
    ):
        s = out[key]
        for g in graphs:
            s.instances += 1
            ok, info = _same_partition(g, tol)
            if ok:
                s.ok()
            else:
                s.fail(**info)
    return out


def _mupi_run(p: Poset, a, b, order, s_bound: CheckSummary, s_order: CheckSummary, bound: float | None = None):
    res = mupi(p, a, b, HiddenOrderOracle(order))
    info = {"n": p.n, "a": tuple(a), "b": tuple(b), "order": tuple(order)} if p.n <= 40 else {"n": p.n}
    if res.order == tuple(order):
        s_order.ok()
    else:
        s_order.fail(**info)
    s_bound.record(res.comparisons, res.bound if bound is None else bound, **info)
    s_bound.instances += 1
    s_order.instances += 1


def sweep_mupi_random(count: int = 1000, max_n: int = 200, seed=0) -> dict[str, CheckSummary]:
    """Core-loop comparisons against ``3 n H(x)`` on random two-chain posets."""
    out = _summaries("mupi_potential_bound", "mupi_correctness")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        p, a, b = random_two_chain_poset(n, seed=int(rng.integers(2**63)))
        order = random_linear_extension(p, seed=int(rng.integers(2**63)))
        _mupi_run(p, a, b, order, out["mupi_potential_bound"], out["mupi_correctness"])
    return out


def sweep_mupi_exhaustive(max_n: int = 10) -> dict[str, CheckSummary]:
    """MUPI comparisons against ``6 log e(P)`` on every width-2 poset."""
    out = _summaries("mupi_log_e", "mupi_correctness_exhaustive")
    for n in range(1, max_n + 1):
        ident = tuple(range(n))
        for p in natural_posets(n, max_width=2):
            a, b = two_chain_cover(p)
            le = math.log2(count_linear_extensions(p))
            _mupi_run(p, a, b, ident, out["mupi_log_e"], out["mupi_correctness_exhaustive"], 6 * le)
    return out


def _dominance_poset(n: int, rng) -> Poset:
    # Points in the plane under coordinate-wise dominance: closed by construction.
    x, y = rng.random(n), rng.random(n)
    rel = (x[:, None] < x[None, :]) & (y[:, None] < y[None, :])
    return Poset(rel)


def fuzz_merge_sort(count: int = 200, max_n: int = 10_000, seed=0, large: int = 3) -> dict[str, CheckSummary]:
    """The ``(g+1) n`` bound for the merge sorter on random posets.

    Most instances are random closures of moderate size; ``large`` of them
    are dominance orders with ``max_n`` elements.
    """
    out = _summaries("merge_chain_entropy_fuzz", "merge_correctness_fuzz")
    rng = np.random.default_rng(seed)
    sizes = [int(rng.integers(2, min(max_n, 200) + 1)) for _ in range(max(count - large, 0))]
    sizes += [max_n] * min(large, count)
    for n in sizes:
        if n <= 200:
            p = random_poset(n, float(rng.uniform(0, 1)), seed=int(rng.integers(2**63)))
        else:
            p = _dominance_poset(n, rng)
        order = random_linear_extension(p, seed=int(rng.integers(2**63)))
        s = MergeSorter(bound_guard=0).fit(p)
        res = s.sort(HiddenOrderOracle(order))
        info = {"n": n}
        out["merge_chain_entropy_fuzz"].record(res.comparisons, s.bound(), **info)
        if res.order == tuple(order):
            out["merge_correctness_fuzz"].ok()
        else:
            out["merge_correctness_fuzz"].fail(**info)
        for v in out.values():
            v.instances += 1
    return out


def fuzz_hwang_lin(count: int = 100_000, max_total: int = 64, seed=0) -> dict[str, CheckSummary]:
    """``|Y| log2(4|X|/|Y|)`` for the block merge, ``X`` the longer chain."""
    out = _summaries("hwang_lin_bound", "hwang_lin_correctness")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        total = int(rng.integers(2, max_total + 1))
        k = int(rng.integers(1, total))
        perm = rng.permutation(total)
        xs, ys = sorted(perm[:k].tolist()), sorted(perm[k:].tolist())
        src = HiddenOrderOracle(range(total))
        rep = hwang_lin_merge(xs, ys, src)
        big, small = max(len(xs), len(ys)), min(len(xs), len(ys))
        info = {"x": len(xs), "y": len(ys)}
        out["hwang_lin_bound"].record(rep.comparisons, small * math.log2(4 * big / small), **info)
        if list(rep.merged) == list(range(total)):
            out["hwang_lin_correctness"].ok()
        else:
            out["hwang_lin_correctness"].fail(**info)
        for v in out.values():
            v.instances += 1
    return out


def verify_all(max_n: int, samples: int = 200, seed=0) -> list[CheckSummary]:
    """Every sweep, scaled to ``max_n``; exhaustive where that stays cheap, sampled above."""
    if max_n > MAX_VERIFY_N:
        from .exceptions import TooLargeError

        raise TooLargeError(f"max_n={max_n} exceeds the verification guard of {MAX_VERIFY_N}")
    if max_n < 2:
        return []
    exhaustive = min(max_n, 6)
    parts = [sweep_sorters(exhaustive)]
    if max_n > exhaustive:
        parts.append(_sampled_sorters(samples, exhaustive + 1, max_n, seed))
    parts.append(sweep_width2_entropy(min(max_n, 8)))
    parts.append(sweep_entropy_oracle(min(max_n, 4), random_count=samples, seed=seed))
    parts.append(sweep_mupi_exhaustive(min(max_n, 8)))
    parts.append(sweep_mupi_random(samples, max_n=20 * max_n, seed=seed))
    parts.append(fuzz_merge_sort(samples, max_n=100 * max_n, seed=seed, large=1))
    parts.append(fuzz_hwang_lin(20 * samples, seed=seed))
    return [s for part in parts for s in part.values()]


def _sampled_sorters(count: int, min_n: int, max_n: int, seed) -> dict[str, CheckSummary]:
    out = _summaries(*SORTER_CHECKS)
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(min_n, max_n + 1))
        p = random_poset(n, float(rng.uniform(0, 1)), seed=int(rng.integers(2**63)))
        fs = _FittedSorters(p, math.log2(count_linear_extensions(p)))
        fs.run(random_linear_extension(p, seed=int(rng.integers(2**63))), out)
        for s in out.values():
            s.instances += 1
    for s in out.values():
        s.name += "_sampled"
    return out
