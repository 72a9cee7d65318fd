import json
import math

import pytest

from posort.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, entropy_report, main, run_sort
from posort.poset import Poset, format_poset, read_poset

from oracles import count_extensions


def write(tmp_path, p, name="p.txt"):
    path = tmp_path / name
    path.write_text(format_poset(p))
    return str(path)


def test_gen_density_extremes(tmp_path, capsys):
    assert main(["gen", "--n", "5", "--density", "0", "--seed", "1"]) == EXIT_OK
    p = read_poset_text(capsys.readouterr().out, tmp_path)
    assert p == Poset.antichain(5)
    assert main(["gen", "--n", "5", "--density", "1", "--seed", "1"]) == EXIT_OK
    p = read_poset_text(capsys.readouterr().out, tmp_path)
    assert all(p.comparable(u, v) for u in range(5) for v in range(5) if u != v)


def read_poset_text(text, tmp_path):
    path = tmp_path / "gen.txt"
    path.write_text(text)
    return read_poset(str(path))


def test_gen_deterministic(capsys):
    main(["gen", "--n", "12", "--density", "0.4", "--seed", "9"])
    first = capsys.readouterr().out
    main(["gen", "--n", "12", "--density", "0.4", "--seed", "9"])
    assert capsys.readouterr().out == first


def test_gen_out_file(tmp_path):
    out = tmp_path / "o.txt"
    assert main(["gen", "--n", "4", "--seed", "0", "-o", str(out)]) == EXIT_OK
    assert read_poset(str(out)).n == 4


@pytest.mark.parametrize("algo", ["insertion", "merge", "cautious", "preprocessed"])
def test_sort_chain_json(tmp_path, capsys, algo):
    path = write(tmp_path, Poset.chain(6))
    assert main(["sort", path, "--algo", algo, "--json", "--verify"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["comparisons"] == 0 and rep["verified"] and rep["bound_ok"]
    assert rep["log2_extensions"] == 0


@pytest.mark.parametrize("algo", ["insertion", "merge", "cautious", "preprocessed"])
def test_sort_antichain_adversary(tmp_path, capsys, algo):
    path = write(tmp_path, Poset.antichain(8))
    assert main(["sort", path, "--algo", algo, "--oracle", "adversary", "--json", "--verify"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["comparisons"] >= 12 and rep["verified"]


def test_sort_text_output(tmp_path, capsys):
    path = write(tmp_path, Poset.antichain(4))
    assert main(["sort", path, "--oracle", "hidden:3", "--verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "comparisons" in out and "order verified: True" in out


def test_sort_hidden_seed_reproducible(tmp_path):
    p = Poset.antichain(7)
    a = run_sort(p, "merge", "hidden:5")
    b = run_sort(p, "merge", "hidden", seed=5)
    assert a.comparisons == b.comparisons and a.seed == b.seed == 5


def test_bad_input(tmp_path, capsys):
    path = tmp_path / "cyc.txt"
    path.write_text("n 2\n0 1\n1 0\n")
    assert main(["sort", str(path)]) == EXIT_USAGE
    path = write(tmp_path, Poset.antichain(2))
    assert main(["sort", path, "--oracle", "psychic"]) == EXIT_USAGE
    assert main(["entropy", str(tmp_path / "missing.txt")]) == EXIT_USAGE


def test_entropy_examples(tmp_path, capsys):
    assert entropy_report(Poset.chain(5))["nH"] == pytest.approx(0.0)
    rep = entropy_report(Poset.antichain(2))
    assert rep["exact"] and rep["nH"] == pytest.approx(2.0)
    path = write(tmp_path, Poset.antichain(3))
    assert main(["entropy", path, "--json"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert not rep["exact"] and rep["nH"] is None and "approximate" in rep["note"]
    assert rep["greedy_upper_nH"] == pytest.approx(3 * math.log2(3))


def test_entropy_width2_sandwich(tmp_path):
    # two interleaved chains of three
    from posort.poset import transitive_closure

    p = transitive_closure([(0, 1), (1, 2), (3, 4), (4, 5), (0, 4), (3, 1), (1, 5), (4, 2)], 6)
    rep = entropy_report(p)
    le = math.log2(count_extensions(p.rel))
    assert rep["exact"]
    assert le - 1e-9 <= rep["nH"] <= 2 * le + 1e-9
    assert rep["nH"] <= rep["greedy_upper_nH"] + 1e-9


def test_verify_exit_codes(capsys):
    assert main(["verify", "--max-n", "11"]) == EXIT_USAGE
    assert main(["verify", "--max-n", "1"]) == EXIT_OK
    assert main(["verify", "--max-n", "4", "--samples", "20", "--json"]) == EXIT_OK
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines() if s.startswith("{")]
    assert lines and all(d["violations"] == 0 for d in lines)


def test_exit_fail_constant():
    assert (EXIT_OK, EXIT_FAIL, EXIT_USAGE) == (0, 1, 2)
