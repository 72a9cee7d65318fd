import pytest

from posort.exceptions import TooLargeError
from posort.poset import natural_posets
from posort.verify import (
    SORTER_CHECKS,
    CheckSummary,
    biconvex_graphs,
    fuzz_hwang_lin,
    fuzz_merge_sort,
    sweep_entropy_oracle,
    sweep_mupi_exhaustive,
    sweep_mupi_random,
    sweep_random_extensions,
    sweep_sorters,
    sweep_width2_entropy,
    verify_all,
)


def all_pass(summaries):
    bad = [s.line() for s in summaries.values() if not s.passed]
    assert not bad, bad


def test_summary_records():
    s = CheckSummary("x")
    assert s.record(1.0, 2.0) and s.passed
    assert not s.record(3.0, 2.0, seed=4)
    assert s.violation_count == 1 and s.violations[0]["seed"] == 4
    assert s.worst_margin == pytest.approx(1.0)
    assert s.line().startswith("FAIL x: 0 instances, 2 runs, 1 violations")
    assert s.to_dict()["violations"] == 1


def test_summary_tolerance():
    s = CheckSummary("t")
    assert s.record(2.0 + 1e-12, 2.0)
    assert not s.record(2.0 + 1e-6, 2.0)


def test_sorters_small():
    out = sweep_sorters(5)
    assert set(out) == set(SORTER_CHECKS)
    all_pass(out)
    # one run per natural labelling, i.e. per (poset, extension) pair up to relabelling
    assert out["correctness"].runs == sum(1 for n in range(6) for _ in natural_posets(n))


def test_random_extensions_small():
    out = sweep_random_extensions(count=50, max_n=6, seed=1)
    all_pass(out)
    assert out["correctness"].instances == 50


def test_width2_entropy_small():
    all_pass(sweep_width2_entropy(6))


def test_biconvex_counts():
    graphs = list(biconvex_graphs(2, 2))
    assert graphs
    assert all(len(g.side_a) <= 2 and len(g.side_b) <= 2 for g in graphs)


def test_entropy_oracle_small():
    all_pass(sweep_entropy_oracle(max_side=3, random_count=20, seed=2))


def test_mupi_small():
    all_pass(sweep_mupi_random(count=30, max_n=40, seed=3))
    all_pass(sweep_mupi_exhaustive(6))


def test_fuzzers_small():
    all_pass(fuzz_merge_sort(count=10, max_n=300, seed=1, large=0))
    all_pass(fuzz_hwang_lin(count=2000))


def test_verify_all_guards():
    with pytest.raises(TooLargeError):
        verify_all(11)
    assert verify_all(1) == []
    checks = verify_all(4, samples=10)
    assert checks and all(c.passed for c in checks)
