"""Command-line entry point: ``cosetlab <family> <command> [flags]``.

Output is one JSON document per line; ``--pretty`` switches to aligned text.
Exit status is 0 on success, 1 on a domain error and 2 on a usage error.
Randomized commands take ``--seed``, fall back to ``COSETLAB_SEED`` and
otherwise draw a fresh seed and report it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from cosetlab import __version__, acceptance, ctab, glnq, hyperoct, mallows, oracle
from cosetlab.combinat import Partition, Permutation, enumerate_partitions, enumerate_permutations, inversions
from cosetlab.errors import CosetlabError
from cosetlab.statlab import Histogram


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep argparse's exit code but route through main
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- output helpers


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (Permutation, Partition)):
        return list(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _pretty(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        width = max((len(str(k)) for k in obj), default=0)
        lines = []
        for k, v in obj.items():
            nested = isinstance(v, dict) or (isinstance(v, list) and any(isinstance(x, (dict, list)) for x in v))
            if v and nested:
                lines.append(f"{pad}{str(k)}:")
                lines.append(_pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{str(k).ljust(width)}  {json.dumps(v, default=_jsonable)}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(_pretty(x, indent + 1) if isinstance(x, dict) else pad + json.dumps(x) for x in obj)
    return pad + str(obj)


class Emitter:
    def __init__(self, pretty: bool, stream=None):
        self.pretty = pretty
        self.stream = stream or sys.stdout

    def __call__(self, obj) -> None:
        if self.pretty:
            obj = json.loads(json.dumps(obj, default=_jsonable))
            print(_pretty(obj), file=self.stream)
            print(file=self.stream)
        else:
            print(json.dumps(obj, default=_jsonable), file=self.stream)


def _resolve_seed(seed: int | None) -> tuple[int, bool]:
    """Return (seed, derived) from the flag, COSETLAB_SEED, or fresh entropy."""
    if seed is not None:
        return seed, False
    env = os.environ.get("COSETLAB_SEED")
    if env is not None:
        try:
            return int(env), False
        except ValueError as exc:
            raise UsageError(f"COSETLAB_SEED must be an integer, got {env!r}") from exc
    return int(np.random.SeedSequence().entropy % (2**63)), True


def _rng(args) -> np.random.Generator:
    seed, derived = _resolve_seed(args.seed)
    args.seed = seed
    if derived:
        print(f"seed: {seed}", file=sys.stderr)
    return np.random.default_rng(seed)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _write_histogram(hist: Histogram, path: str | None, label: str) -> None:
    if path:
        hist.to_csv(path, label_header=label)


# ---------------------------------------------------------------- mallows


def cmd_mallows_sample(args, emit):
    model = mallows.MallowsModel(args.n, args.q)
    rng = _rng(args)
    words = mallows.sample_batch(model, args.count, rng)
    hist = Histogram()
    for w in words.tolist():
        inv = inversions(w)
        hist.update([inv])
        if not args.quiet:
            emit({"word": w, "inversions": inv})
    _write_histogram(hist, args.histogram, "inversions")
    emit({"seed": args.seed, "count": args.count, "n": args.n, "q": args.q,
          "mean_inversions": sum(k * v for k, v in hist.counts.items()) / hist.total})


def cmd_mallows_pmf(args, emit):
    w = Permutation.parse(args.word)
    model = mallows.MallowsModel(w.n, args.q)
    emit({"word": str(w), "q": args.q, "inversions": inversions(w), "pmf": mallows.pmf(model, w)})


def cmd_mallows_descent(args, emit):
    model = mallows.MallowsModel(args.n, args.q)
    s = _ints(args.set) if args.set else ()
    emit({
        "n": args.n, "q": args.q, "set": sorted(s),
        "equals": mallows.descent_set_prob(model, s),
        "contains": mallows.descent_subset_prob(model, s),
    })


# ---------------------------------------------------------------- glnq


def cmd_glnq_sample(args, emit):
    rng = _rng(args)
    for _ in range(args.count):
        if args.method == "pak":
            A = glnq.sample_uniform_pak(args.n, args.q, rng)
            emit({"matrix": A.to_list(), "cell": str(glnq.bruhat_cell(A))})
        else:
            A, attempts = glnq.sample_uniform_rejection(args.n, args.q, rng)
            emit({"matrix": A.to_list(), "attempts": attempts})
    emit({"seed": args.seed, "count": args.count, "method": args.method})


def cmd_glnq_bruhat(args, emit):
    try:
        rows = json.loads(args.matrix)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--matrix must be a JSON array of rows: {exc}") from exc
    A = glnq.FqMatrix.from_rows(rows, args.q)
    f = glnq.bruhat_decompose(A)
    emit({"b1": f.b1.to_list(), "w": str(f.w), "b2": f.b2.to_list(), "inversions": inversions(f.w),
          "row_swaps": f.swaps, "verified": f.product() == A})


def cmd_glnq_cells(args, emit):
    if args.exhaustive:
        emit(acceptance.gl_cells(args.n, args.q))
        return
    cells = [{"w": str(w), "inversions": inversions(w), "size": glnq.cell_size(args.n, args.q, w)}
             for w in enumerate_permutations(args.n)]
    emit({"n": args.n, "q": args.q, "borel_order": glnq.borel_order(args.n, args.q),
          "group_order": glnq.group_order(args.n, args.q), "cells": cells})


# ---------------------------------------------------------------- hyperoct


def cmd_hyperoct_map(args, emit):
    sigma = Permutation.parse(args.word)
    emit({"word": str(sigma), "partition": hyperoct.coset_partition(sigma, args.pairing)})


def cmd_hyperoct_sizes(args, emit):
    model = hyperoct.EwensModel(args.n, Fraction(1, 2))
    rows = [{"partition": lam, "size": hyperoct.coset_size(lam), "ewens": hyperoct.ewens_pmf(model, lam)}
            for lam in enumerate_partitions(args.n)]
    emit({"n": args.n, "total": sum(r["size"] for r in rows), "classes": rows})


def cmd_hyperoct_poissonize(args, emit):
    rng = _rng(args)
    t = Fraction(args.t)
    draws = hyperoct.poissonization_samples(t, args.count, rng)
    hist = Histogram()
    for n, a in draws:
        hist.update([n])
        if not args.quiet:
            emit({"n": n, "a": a})
    _write_histogram(hist, args.histogram, "n")
    means = [sum(a[i] if len(a) > i else 0 for _, a in draws) / args.count for i in range(3)]
    emit({"seed": args.seed, "t": t, "count": args.count, "mean_a": means,
          "poisson_rates": [float(t) ** i / (2 * i) for i in (1, 2, 3)]})


# ---------------------------------------------------------------- ctab


def _margins(args) -> ctab.MarginSpec:
    return ctab.MarginSpec(_ints(args.rows), _ints(args.cols))


def _table_json(t: ctab.ContingencyTable) -> list[list[int]]:
    return [list(r) for r in t.entries]


def cmd_ctab_map(args, emit):
    m = _margins(args)
    t = ctab.table_of_permutation(Permutation.parse(args.word), m)
    emit({"table": _table_json(t), "coset_size": ctab.coset_size(t), "pmf": ctab.fisher_yates_pmf(t),
          "min_length_rep": str(ctab.min_length_rep(t))})


def cmd_ctab_sample(args, emit):
    m = _margins(args)
    rng = _rng(args)
    hist = Histogram()
    for _ in range(args.count):
        t = ctab.fy_sample(m, rng)
        hist.update([tuple(t.flat())])
        if not args.quiet:
            emit({"table": _table_json(t)})
    _write_histogram(hist, args.histogram, "entries")
    emit({"seed": args.seed, "count": args.count, "distinct_tables": len(hist.counts)})


def cmd_ctab_chi2(args, emit):
    text = sys.stdin.read() if args.table == "-" else Path(args.table).read_text()
    t = ctab.ContingencyTable.from_csv(text)
    rep = ctab.l1_report(t)
    emit({"n": t.n, "rows": t.margins.rows, "cols": t.margins.cols, "chi2": rep.chi2,
          "dof": (len(t.margins.rows) - 1) * (len(t.margins.cols) - 1), "l1": rep.l1,
          "l1_bound": rep.bound, "independence_table": ctab.independence_table(t.margins).round(4)})


def cmd_ctab_zeros(args, emit):
    rows = _ints(args.r)
    cols = _ints(args.c)
    rows = rows[0] if len(rows) == 1 else rows
    cols = cols[0] if len(cols) == 1 else cols
    seed, derived = _resolve_seed(args.seed)
    if derived:
        print(f"seed: {seed}", file=sys.stderr)
    res = ctab.zeros_experiment(rows, cols, args.samples, seed, I=args.I, J=args.J, shards=args.shards,
                                jobs=args.jobs, allow_varying_rows=args.varying_rows)
    _write_histogram(res.histogram, args.histogram, "zeros")
    emit({"seed": seed, **res.to_dict()})


def cmd_ctab_enumerate(args, emit):
    m = _margins(args)
    tables = list(ctab.enumerate_tables(m))
    for t in tables:
        emit({"table": _table_json(t), "coset_size": ctab.coset_size(t), "pmf": ctab.fisher_yates_pmf(t)})
    emit({"count": len(tables), "total_size": sum(ctab.coset_size(t) for t in tables)})


# ---------------------------------------------------------------- oracle / reproduce


def cmd_oracle_verify(args, emit):
    params = {}
    if args.family == "fisher-yates":
        params = {"rows": _ints(args.rows or "3,2"), "cols": _ints(args.cols or "2,2,1")}
    elif args.family == "mallows":
        params = {"n": args.n or 2, "q": args.q or 2}
    else:
        params = {"n": args.n or 2}
    report = oracle.verify_family(args.family, **params)
    emit(report)
    return 0 if report["passed"] else 1


def cmd_reproduce(args, emit):
    seed, derived = _resolve_seed(args.seed)
    if derived:
        seed = acceptance.DEFAULT_SEED
    if args.recipe == "all":
        report = acceptance.run_all(seed)
        for r in report["results"]:
            emit(r)
        emit({"passed": report["passed"], "seed": seed,
              "failed": [r["criterion"] for r in report["results"] if not r["passed"]]})
        return 0 if report["passed"] else 1
    kwargs = {"seed": seed}
    if args.recipe == "gl-cells":
        kwargs.update(n=args.n or 3, q=args.q or 2)
    result = acceptance.RECIPES[args.recipe](**kwargs)
    emit(result)
    return 0 if result["passed"] else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cosetlab", description="Double-coset probability toolkit.")
    p.add_argument("--version", action="version", version=f"cosetlab {__version__}")
    p.add_argument("--pretty", action="store_true", help="aligned text instead of JSON lines")
    fam = p.add_subparsers(dest="family", required=True, parser_class=_Parser)
    # leaf commands also accept --pretty after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", default=argparse.SUPPRESS)

    def seeded(sp):
        sp.add_argument("--seed", type=int, help="random seed (default: $COSETLAB_SEED or fresh)")

    def sampled(sp):
        sp.add_argument("--count", type=_positive, default=1)
        sp.add_argument("--quiet", action="store_true", help="only print the summary line")
        sp.add_argument("--histogram", metavar="CSV", help="write a histogram CSV here")

    m = fam.add_parser("mallows", help="Mallows measure on S_n").add_subparsers(dest="cmd", required=True)
    sp = m.add_parser("sample", parents=[common])
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--q", type=int, required=True)
    seeded(sp)
    sampled(sp)
    sp.set_defaults(func=cmd_mallows_sample)
    sp = m.add_parser("pmf", parents=[common])
    sp.add_argument("--word", required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.set_defaults(func=cmd_mallows_pmf)
    sp = m.add_parser("descent-prob", parents=[common])
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--set", default="", help="descent positions, e.g. 1,3")
    sp.set_defaults(func=cmd_mallows_descent)

    g = fam.add_parser("glnq", help="GL_n(F_q) and Bruhat cells").add_subparsers(dest="cmd", required=True)
    sp = g.add_parser("sample", parents=[common])
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--method", choices=("pak", "rejection"), default="pak")
    sp.add_argument("--count", type=_positive, default=1)
    seeded(sp)
    sp.set_defaults(func=cmd_glnq_sample)
    sp = g.add_parser("bruhat", parents=[common])
    sp.add_argument("--matrix", required=True, help="JSON rows of field codes")
    sp.add_argument("--q", type=int, required=True)
    sp.set_defaults(func=cmd_glnq_bruhat)
    sp = g.add_parser("cells", parents=[common])
    sp.add_argument("--n", type=_positive, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--exhaustive", action="store_true", help="decompose every group element")
    sp.set_defaults(func=cmd_glnq_cells)

    h = fam.add_parser("hyperoct", help="B_n double cosets of S_2n").add_subparsers(dest="cmd", required=True)
    sp = h.add_parser("map", parents=[common])
    sp.add_argument("--word", required=True)
    sp.add_argument("--pairing", choices=hyperoct.PAIRINGS, default="adjacent")
    sp.set_defaults(func=cmd_hyperoct_map)
    sp = h.add_parser("sizes", parents=[common])
    sp.add_argument("--n", type=_positive, required=True)
    sp.set_defaults(func=cmd_hyperoct_sizes)
    sp = h.add_parser("poissonize", parents=[common])
    sp.add_argument("--t", required=True, help="rational in (0, 1), e.g. 1/2")
    seeded(sp)
    sampled(sp)
    sp.set_defaults(func=cmd_hyperoct_poissonize)

    c = fam.add_parser("ctab", help="contingency tables").add_subparsers(dest="cmd", required=True)
    sp = c.add_parser("map", parents=[common])
    sp.add_argument("--word", required=True)
    sp.add_argument("--rows", required=True)
    sp.add_argument("--cols", required=True)
    sp.set_defaults(func=cmd_ctab_map)
    sp = c.add_parser("sample", parents=[common])
    sp.add_argument("--rows", required=True)
    sp.add_argument("--cols", required=True)
    seeded(sp)
    sampled(sp)
    sp.set_defaults(func=cmd_ctab_sample)
    sp = c.add_parser("chi2", parents=[common])
    sp.add_argument("--table", required=True, help="CSV path, or - for stdin")
    sp.set_defaults(func=cmd_ctab_chi2)
    sp = c.add_parser("zeros", parents=[common])
    sp.add_argument("--I", type=_positive)
    sp.add_argument("--J", type=_positive)
    sp.add_argument("--r", required=True, help="row sum, or comma list of row sums")
    sp.add_argument("--c", required=True, help="column sum, or comma list of column sums")
    sp.add_argument("--samples", type=_positive, default=50_000)
    sp.add_argument("--shards", type=_positive, default=4)
    sp.add_argument("--jobs", type=_positive, default=1)
    sp.add_argument("--varying-rows", action="store_true", help="allow unequal row sums")
    sp.add_argument("--histogram", metavar="CSV")
    seeded(sp)
    sp.set_defaults(func=cmd_ctab_zeros)
    sp = c.add_parser("enumerate", parents=[common])
    sp.add_argument("--rows", required=True)
    sp.add_argument("--cols", required=True)
    sp.set_defaults(func=cmd_ctab_enumerate)

    o = fam.add_parser("oracle", help="brute-force double cosets").add_subparsers(dest="cmd", required=True)
    sp = o.add_parser("verify", parents=[common])
    sp.add_argument("--family", choices=("mallows", "ewens", "fisher-yates"), required=True)
    sp.add_argument("--n", type=_positive)
    sp.add_argument("--q", type=int)
    sp.add_argument("--rows")
    sp.add_argument("--cols")
    sp.set_defaults(func=cmd_oracle_verify)

    sp = fam.add_parser("reproduce", help="run an acceptance recipe", parents=[common])
    sp.add_argument("recipe", choices=sorted(acceptance.RECIPES) + ["all"])
    sp.add_argument("--n", type=_positive)
    sp.add_argument("--q", type=int)
    seeded(sp)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        emit = Emitter(args.pretty)
        code = args.func(args, emit)
        return 0 if code is None else code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CosetlabError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    run()
