"""``posort`` command line: gen, sort, entropy, verify.

Exit codes: 0 on success, 1 when a verification or bound check fails,
2 for bad input (parse errors, cycles, guards).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass

from .entropy import (
    chain_size_entropy,
    convex_bipartite_entropy,
    incomparability_graph,
    point_entropy,
    greedy_point,
    width2_entropy,
)
from .exceptions import InternalConsistencyError, PosortError
from .oracle import HiddenOrderOracle, IntervalAdversary
from .poset import (
    Poset,
    format_poset,
    greedy_chain_decomposition,
    is_linear_extension,
    log2_linear_extensions,
    maximum_chain,
    random_linear_extension,
    random_poset,
    read_poset,
    two_chain_cover,
)
from .sorters import SORTERS
from .verify import MAX_VERIFY_N, verify_all

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunReport:
    n: int
    algorithm: str
    oracle: str
    seed: int | None
    comparisons: int
    bound_value: float | None
    log2_extensions: float | None
    elapsed_ms: float
    verified: bool | None = None
    bound_ok: bool | None = None


def _parse_oracle(spec: str, seed: int | None) -> tuple[str, int | None]:
    kind, _, arg = spec.partition(":")
    if kind == "adversary":
        if arg:
            raise ValueError("the adversary takes no seed")
        return "adversary", None
    if kind == "hidden":
        return "hidden", int(arg) if arg else (seed if seed is not None else 0)
    raise ValueError(f"unknown oracle {spec!r}; use hidden[:<seed>] or adversary")


def _answers_agree(order, answers) -> bool:
    rank = {v: r for r, v in enumerate(order)}
    return all((rank[a] <= rank[b]) == yes for a, b, yes in answers)


def cmd_gen(args) -> int:
    p = random_poset(args.n, args.density, seed=args.seed)
    text = format_poset(p)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run_sort(p: Poset, algorithm: str, oracle: str, seed: int | None = None, verify: bool = False) -> RunReport:
    kind, seed = _parse_oracle(oracle, seed)
    if kind == "hidden":
        hidden = random_linear_extension(p, seed=seed)
        src = HiddenOrderOracle(hidden)
    else:
        hidden, src = None, IntervalAdversary(p)
    sorter = SORTERS[algorithm]().fit(p)
    start = time.perf_counter()
    res = sorter.sort(src)
    elapsed = (time.perf_counter() - start) * 1000
    report = RunReport(p.n, algorithm, kind, seed, res.comparisons, res.bound_value, None, round(elapsed, 3))
    if verify:
        if hidden is not None:
            report.verified = res.order == tuple(hidden)
        else:
            report.verified = is_linear_extension(p, res.order) and _answers_agree(res.order, src.answers)
        if p.n <= sorter.bound_guard:
            report.log2_extensions = log2_linear_extensions(p)
        bound = res.bound_value
        report.bound_ok = bound is None or not math.isfinite(bound) or res.comparisons <= bound + 1e-9
    return report


def cmd_sort(args) -> int:
    p = read_poset(args.poset)
    report = run_sort(p, args.algo, args.oracle, args.seed, args.verify)
    if args.json:
        print(json.dumps(asdict(report)))
    else:
        line = f"{report.algorithm} on n={report.n} ({report.oracle}): {report.comparisons} comparisons"
        if report.bound_value is not None:
            line += f", bound {report.bound_value:.3f}"
        print(line)
        if args.verify:
            print(f"order verified: {report.verified}; bound check: {'pass' if report.bound_ok else 'FAIL'}")
            if report.log2_extensions is not None:
                print(f"log2 e(P) = {report.log2_extensions:.6f}")
    if args.verify and not (report.verified and report.bound_ok):
        return EXIT_FAIL
    return EXIT_OK


def entropy_report(p: Poset) -> dict:
    n = p.n
    out: dict = {"n": n}
    if n == 0:
        return {**out, "width_at_most_2": True, "exact": True, "nH": 0.0, "greedy_upper_nH": 0.0}
    cover = two_chain_cover(p)
    out["width_at_most_2"] = cover is not None
    if cover is not None:
        h, _, _, _ = width2_entropy(p, cover)
        out["exact"] = True
        out["nH"] = n * h
    else:
        a = maximum_chain(p)
        part, _ = convex_bipartite_entropy(incomparability_graph(p, a))
        out["exact"] = False
        out["nH"] = None
        out["chain_vs_rest_nH"] = n * part.entropy
        out["note"] = "approximate only: width exceeds 2, exact value is for the chain-vs-rest graph"
    dec = greedy_chain_decomposition(p)
    out["greedy_upper_nH"] = n * point_entropy(greedy_point(dec))
    out["greedy_chain_entropy"] = chain_size_entropy(dec)
    return out


def cmd_entropy(args) -> int:
    rep = entropy_report(read_poset(args.poset))
    if args.json:
        print(json.dumps(rep))
        return EXIT_OK
    if rep["exact"]:
        print(f"nH = {rep['nH']:.6f} (exact)")
    else:
        print(f"chain-vs-rest nH = {rep['chain_vs_rest_nH']:.6f}; {rep['note']}")
    print(f"greedy upper bound nH(x) = {rep['greedy_upper_nH']:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.max_n > MAX_VERIFY_N:
        print(f"error: --max-n {args.max_n} exceeds the guard of {MAX_VERIFY_N}", file=sys.stderr)
        return EXIT_USAGE
    checks = verify_all(args.max_n, samples=args.samples, seed=args.seed or 0)
    if args.json:
        for c in checks:
            print(json.dumps(c.to_dict()))
    else:
        if not checks:
            print(f"max_n={args.max_n}: nothing to check")
        for c in checks:
            print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="posort", description="Sorting under partial information.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a random poset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--density", type=float, default=0.3)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("-o", "--out", default=None, help="output path (default stdout)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sort", help="sort a hidden order consistent with a poset file")
    s.add_argument("poset")
    s.add_argument("--algo", choices=sorted(SORTERS), default="preprocessed")
    s.add_argument("--oracle", default="hidden", help="hidden[:<seed>] or adversary")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--json", action="store_true")
    s.add_argument("--verify", action="store_true", help="check the output order and the comparison bound")
    s.set_defaults(func=cmd_sort)

    e = sub.add_parser("entropy", help="entropy of the incomparability graph")
    e.add_argument("poset")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_entropy)

    v = sub.add_parser("verify", help="sweep every bound on small instances")
    v.add_argument("--max-n", type=int, default=5)
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InternalConsistencyError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (PosortError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
