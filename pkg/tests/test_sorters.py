import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from posort.oracle import HiddenOrderOracle, IntervalAdversary
from posort.poset import Poset, is_linear_extension, linear_extensions, log2_linear_extensions, random_linear_extension, random_poset, transitive_closure
from posort.sorters import (
    CAUTIOUS_CONSTANT,
    SORTERS,
    CautiousMergeSorter,
    InsertionSorter,
    MergeSorter,
    PreprocessedSorter,
    cautious_merge_sort,
    function_f,
    insertion_sort_supi,
    merge_sort_supi,
    preprocessed_sort,
    eps_merge_bound,
)


ALL = sorted(SORTERS)


def run(name, p, order):
    return SORTERS[name]().fit(p).sort(HiddenOrderOracle(order))


@pytest.mark.parametrize("name", ALL)
def test_chain_needs_nothing(name):
    p = Poset.chain(6)
    res = run(name, p, range(6))
    assert res.order == tuple(range(6)) and res.comparisons == 0


@pytest.mark.parametrize("name", ALL)
def test_trivial_sizes(name):
    for n in (0, 1):
        res = run(name, Poset.antichain(n), range(n))
        assert res.order == tuple(range(n)) and res.comparisons == 0


def test_insertion_examples():
    for order in linear_extensions(Poset.antichain(4)):
        res = insertion_sort_supi(Poset.antichain(4), HiddenOrderOracle(order))
        assert res.order == order and res.comparisons <= 5
    # a<c, b<c, b<d
    p = transitive_closure([(0, 2), (1, 2), (1, 3)], 4)
    for order in linear_extensions(p):
        res = insertion_sort_supi(p, HiddenOrderOracle(order))
        assert res.order == order and res.comparisons <= 4 == res.bound_value


def test_merge_examples():
    n = 8
    for seed in range(20):
        order = random_linear_extension(Poset.antichain(n), seed=seed)
        res = merge_sort_supi(Poset.antichain(n), HiddenOrderOracle(order))
        assert res.comparisons <= (math.log2(n) + 1) * n
    # greedy decomposition sizes (2, 1, 1)
    p = transitive_closure([(0, 1)], 4)
    s = MergeSorter().fit(p)
    assert sorted(s.decomposition_.sizes) == [1, 1, 2]
    assert s.bound() == pytest.approx(10.0)
    for order in linear_extensions(p):
        assert s.sort(HiddenOrderOracle(order)).comparisons <= 10


@pytest.mark.parametrize("fn", [cautious_merge_sort, preprocessed_sort])
def test_two_antichain_one_comparison(fn):
    for order in ((0, 1), (1, 0)):
        res = fn(Poset.antichain(2), HiddenOrderOracle(order))
        assert res.order == order and res.comparisons == 1
        assert res.bound_value == pytest.approx(CAUTIOUS_CONSTANT)


def test_function_f():
    f = function_f((7,), {7: F(2, 5)})
    assert f(0, 0) == (F(2, 5), 0, 0)
    f = function_f((0, 1, 2), {0: F(1, 2), 1: F(3, 4), 2: F(1, 2)})
    assert f(0, 2) == (F(3, 4), 1, 1)
    assert f(0, 0) == (F(1, 2), 0, 0)
    f = function_f((0, 1, 2, 3), dict.fromkeys(range(4), F(1, 3)))
    for c in range(4):
        for d in range(c, 4):
            assert f(c, d) == (F(1, 3), c, d)
    with pytest.raises(IndexError):
        f(2, 1)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=9))
def test_function_f_table(ws):
    w = [F(v, 4) for v in ws]
    f = function_f(tuple(range(len(w))), dict(enumerate(w)))
    for c in range(len(w)):
        for d in range(c, len(w)):
            m, c2, d2 = f(c, d)
            assert m == max(w[c : d + 1])
            assert c <= c2 <= d2 <= d and w[c2] == w[d2] == m
            assert all(w[i] < m for i in range(c, c2)) and all(w[i] < m for i in range(d2 + 1, d + 1))


@pytest.mark.parametrize("name", ALL)
@given(p=st.integers(0, 200).flatmap(lambda n: st.tuples(st.just(n), st.floats(0, 1), st.integers(0, 10**6))))
def test_fuzz_correct(name, p):
    n, density, seed = p
    poset = random_poset(n, density, seed=seed)
    order = random_linear_extension(poset, seed=seed + 1)
    res = run(name, poset, order)
    assert res.order == order


@pytest.mark.parametrize("name", ALL)
def test_adversary_consistent(name):
    for seed in range(10):
        p = random_poset(14, 0.2, seed=seed)
        adv = IntervalAdversary(p)
        res = SORTERS[name]().fit(p).sort(adv)
        assert adv.is_consistent() and res.comparisons == adv.query_count
        assert is_linear_extension(p, res.order)
        rank = {v: r for r, v in enumerate(res.order)}
        assert all((rank[a] < rank[b]) == yes for a, b, yes in adv.answers)


def test_bounds_small_exhaustive():
    from posort.poset import natural_posets

    for n in range(2, 6):
        for p in natural_posets(n):
            le = log2_linear_extensions(p)
            fitted = {k: SORTERS[k]().fit(p) for k in ALL}
            for order in linear_extensions(p):
                for k, s in fitted.items():
                    res = s.sort(HiddenOrderOracle(order))
                    assert res.order == order
                    assert res.comparisons <= res.bound_value + 1e-9
                    if k == "merge":
                        assert res.comparisons <= eps_merge_bound(le, n, 1.0) + 1e-9
                    if k in ("cautious", "preprocessed"):
                        assert res.comparisons <= CAUTIOUS_CONSTANT * le + 1e-9


class TestPreprocessed:
    def test_no_queries_in_phase_one(self):
        p = random_poset(40, 0.3, seed=3)
        src = HiddenOrderOracle(random_linear_extension(p, seed=3))
        s = PreprocessedSorter().fit(p)
        assert src.query_count == 0
        res = s.sort(src)
        assert res.phase_breakdown["preprocessing_queries"] == 0

    def test_reuse_artifacts(self):
        p = random_poset(30, 0.25, seed=8)
        s = PreprocessedSorter().fit(p)
        before = s.artifacts_
        for seed in range(5):
            order = random_linear_extension(p, seed=seed)
            assert s.sort(HiddenOrderOracle(order)).order == order
            assert s.artifacts_ == before
        again = PreprocessedSorter().fit(p).artifacts_
        assert (again.chain_a, dict(again.x), again.f, again.schedule) == (
            before.chain_a,
            dict(before.x),
            before.f,
            before.schedule,
        )

    def test_strict_mode(self):
        for seed in range(15):
            p = random_poset(20, 0.3, seed=seed)
            order = random_linear_extension(p, seed=seed)
            assert preprocessed_sort(p, HiddenOrderOracle(order), strict=True).order == order


class TestEstimatorApi:
    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            MergeSorter().sort(HiddenOrderOracle([0]))

    def test_clone_and_params(self):
        s = CautiousMergeSorter(bound_guard=5, strict=True)
        assert s.get_params() == {"bound_guard": 5, "strict": True}
        c = clone(s)
        assert c.get_params() == s.get_params() and not hasattr(c, "poset_")

    def test_matrix_input(self):
        rel = np.zeros((3, 3), dtype=int)
        rel[0, 1] = rel[1, 2] = 1
        s = InsertionSorter().fit(rel)
        assert s.poset_.less(0, 2)
        assert s.fit_predict(rel, HiddenOrderOracle((0, 1, 2))) == (0, 1, 2)

    def test_bad_matrix(self):
        with pytest.raises(ValueError):
            InsertionSorter().fit(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            InsertionSorter().fit(np.full((2, 2), 3))

    def test_bound_guard(self):
        p = Poset.antichain(6)
        res = CautiousMergeSorter(bound_guard=4).fit(p).sort(HiddenOrderOracle(range(6)))
        assert res.bound_value is None
