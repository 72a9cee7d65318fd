import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from posort.merge import (
    binary_insert,
    execute_schedule,
    huffman_merge,
    huffman_schedule,
    hwang_lin_block_size,
    hwang_lin_merge,
    linear_merge,
)
from posort.oracle import HiddenOrderOracle, IntervalAdversary
from posort.poset import Poset, transitive_closure


def split(perm, k):
    """Two sorted chains from a hidden order given as a permutation."""
    return sorted(perm[:k]), sorted(perm[k:])


@st.composite
def two_chains(draw, max_total=40):
    total = draw(st.integers(0, max_total))
    perm = draw(st.permutations(range(total)))
    k = draw(st.integers(0, total))
    return total, *split(list(perm), k)


class TestLinear:
    def test_empty_side(self):
        r = linear_merge((), (0, 1), HiddenOrderOracle(range(2)))
        assert r.merged == (0, 1) and r.comparisons == 0

    def test_singletons(self):
        r = linear_merge((1,), (0,), HiddenOrderOracle(range(2)))
        assert r.merged == (0, 1) and r.comparisons == 1

    def test_adversarial_three_two(self):
        p = transitive_closure([(0, 1), (1, 2), (3, 4)], 5)
        adv = IntervalAdversary(p)
        r = linear_merge((0, 1, 2), (3, 4), adv)
        assert r.comparisons <= 4

    def test_all_orders_three_two(self):
        for perm in itertools.permutations(range(5)):
            x, y = split(list(perm), 3)
            r = linear_merge(x, y, HiddenOrderOracle(range(5)))
            assert r.merged == tuple(range(5)) and r.comparisons <= 4

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            linear_merge((0,), (0,), HiddenOrderOracle(range(1)))

    @given(two_chains())
    def test_sorted_and_bounded(self, data):
        total, x, y = data
        r = linear_merge(x, y, HiddenOrderOracle(range(total)))
        assert r.merged == tuple(range(total))
        assert r.comparisons <= max(total - 1, 0) if x and y else r.comparisons == 0


class TestBinaryInsert:
    def test_empty(self):
        assert binary_insert((), 0, HiddenOrderOracle((0,))).comparisons == 0

    def test_single(self):
        assert binary_insert((0,), 1, HiddenOrderOracle((0, 1))).comparisons == 1

    def test_seven_all_positions(self):
        for pos in range(8):
            order = list(range(7))
            order.insert(pos, 7)
            r = binary_insert(tuple(range(7)), 7, HiddenOrderOracle(order))
            assert r.merged == tuple(order) and r.comparisons <= 3

    def test_already_present(self):
        with pytest.raises(ValueError):
            binary_insert((0, 1), 1, HiddenOrderOracle((0, 1)))

    @given(st.integers(0, 60), st.data())
    def test_bound(self, m, data):
        pos = data.draw(st.integers(0, m))
        order = list(range(m))
        order.insert(pos, m)
        r = binary_insert(tuple(range(m)), m, HiddenOrderOracle(order))
        assert r.merged == tuple(order)
        assert r.comparisons <= math.ceil(math.log2(m + 1))


def chain_entropy(sizes):
    n = sum(sizes)
    return -sum(s / n * math.log2(s / n) for s in sizes if s)


class TestHuffman:
    def test_schedule_tie_break(self):
        assert huffman_schedule([1, 1, 2]) == ((0, 1, 3), (2, 3, 4))

    def test_schedule_single(self):
        assert huffman_schedule([5]) == ()

    def test_single_chain(self):
        r = huffman_merge([(0, 1, 2)], HiddenOrderOracle(range(3)))
        assert r.merged == (0, 1, 2) and r.comparisons == 0

    def test_sizes_112_all_orders(self):
        worst = 0
        for perm in itertools.permutations(range(4)):
            rank = list(perm)
            chains = [(0,), (1,), tuple(sorted((2, 3), key=lambda v: rank.index(v)))]
            order = rank
            r = huffman_merge(chains, HiddenOrderOracle(order))
            assert r.merged == tuple(order)
            worst = max(worst, r.comparisons)
        assert worst <= 4 <= (1.5 + 1) * 4

    def test_singletons(self):
        import random

        for n in (2, 5, 16, 33):
            for s in range(5):
                order = list(range(n))
                random.Random(s).shuffle(order)
                r = huffman_merge([(v,) for v in range(n)], HiddenOrderOracle(order))
                assert r.merged == tuple(order)
                assert r.comparisons <= (math.log2(n) + 1) * n

    def test_bad_schedule(self):
        with pytest.raises(ValueError):
            execute_schedule([(0,), (1,), (2,)], ((0, 1, 3),), HiddenOrderOracle(range(3)))

    @given(st.lists(st.integers(1, 8), min_size=1, max_size=8), st.randoms(use_true_random=False))
    def test_bound_and_determinism(self, sizes, rnd):
        n = sum(sizes)
        order = list(range(n))
        rnd.shuffle(order)
        rank = {v: i for i, v in enumerate(order)}
        chains, start = [], 0
        for s in sizes:
            chains.append(tuple(sorted(range(start, start + s), key=rank.get)))
            start += s
        r1 = huffman_merge(chains, HiddenOrderOracle(order))
        r2 = huffman_merge(chains, HiddenOrderOracle(order))
        assert r1 == r2
        assert r1.merged == tuple(order)
        assert r1.comparisons <= (chain_entropy(sizes) + 1) * n + 1e-9


class TestHwangLin:
    def test_block_size(self):
        assert hwang_lin_block_size(16, 4) == 4
        assert hwang_lin_block_size(5, 2) == 2
        assert hwang_lin_block_size(3, 3) == 1

    def test_one_one(self):
        r = hwang_lin_merge((0,), (1,), HiddenOrderOracle(range(2)))
        assert r.comparisons == 1 <= 1 * math.log2(4)

    def test_four_one_all_positions(self):
        for pos in range(5):
            order = list(range(4))
            order.insert(pos, 4)
            r = hwang_lin_merge((0, 1, 2, 3), (4,), HiddenOrderOracle(order))
            assert r.merged == tuple(order) and r.comparisons <= 4

    def test_sixteen_four(self):
        import random

        for s in range(200):
            perm = list(range(20))
            random.Random(s).shuffle(perm)
            x, y = split(perm, 16)
            r = hwang_lin_merge(x, y, HiddenOrderOracle(range(20)))
            assert r.merged == tuple(range(20)) and r.comparisons <= 16

    def test_empty(self):
        assert hwang_lin_merge((), (0,), HiddenOrderOracle((0,))).comparisons == 0

    @given(two_chains(max_total=120))
    def test_bound(self, data):
        total, x, y = data
        r = hwang_lin_merge(x, y, HiddenOrderOracle(range(total)))
        assert r.merged == tuple(range(total))
        if x and y:
            big, small = max(len(x), len(y)), min(len(x), len(y))
            assert r.comparisons <= small * math.log2(4 * big / small) + 1e-9

    @given(two_chains(max_total=12))
    def test_adversary(self, data):
        total, x, y = data
        p = transitive_closure(list(zip(x, x[1:])) + list(zip(y, y[1:])), total)
        adv = IntervalAdversary(p)
        r = hwang_lin_merge(x, y, adv)
        assert sorted(r.merged) == list(range(total))
        if x and y:
            big, small = max(len(x), len(y)), min(len(x), len(y))
            assert r.comparisons <= small * math.log2(4 * big / small) + 1e-9
        assert adv.is_consistent()
