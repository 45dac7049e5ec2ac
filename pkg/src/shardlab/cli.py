"""Experiment driver and command-line interface.

Subcommands: ingest | synth | experiment | query-sim | verify | slope.

``experiment`` sweeps (policy x scheme x codec x m x seed) over a corpus,
writing one size row per point to sizes.csv and, when a query file is given,
one surrogate row per (policy, m, seed) to surrogates.csv.  Row order always
follows the plan's cartesian order; files are written via temp-then-rename so
a failed run leaves no partial output.  A flat key=value config file can
supply any experiment flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import (
    TinyTermDoc,
    UrnTrialSpec,
    check_slice_monotonicity,
    clustered_list_split,
    expected_partition_gain,
    partitioned_bits,
    simulate_max_load,
    single_node_bits,
    slice_nodes,
)
from .codecs import CODEC_NAMES, CodecSpec
from .corpus import Corpus, SyntheticSpec, corpus_stats, generate_synthetic, ingest_corpus
from .invindex import ShardIndex, build_shard_indexes, build_sliced_indexes
from .metrics import bits_per_posting
from .ordering import SCHEMES, make_ordering
from .querysim import average_surrogates, load_queries
from .sharding import POLICIES, make_assignment

SIZE_HEADER = ["policy", "scheme", "codec", "m", "seed", "docs", "postings",
               "total_bits", "overhead_bits", "bpp", "bpp_oh"]
SURROGATE_HEADER = ["policy", "m", "seed", "avg_td", "avg_tc", "queries_evaluated"]


@dataclass(frozen=True)
class ExperimentPlan:
    outdir: str
    corpus_path: str | None = None
    synthetic: SyntheticSpec | None = None
    stopwords: str | None = None
    schemes: tuple[str, ...] = ("rnd", "url")
    policies: tuple[str, ...] = ("random",)
    codecs: tuple[str, ...] = ("delta",)
    m_values: tuple[int, ...] = (1,)
    seeds: tuple[int, ...] = (0,)
    queries_path: str | None = None

    def __post_init__(self) -> None:
        if (self.corpus_path is None) == (self.synthetic is None):
            raise ValueError("exactly one corpus source required: a file or a synthetic spec")
        for name, values, known in (("scheme", self.schemes, SCHEMES),
                                    ("policy", self.policies, POLICIES),
                                    ("codec", self.codecs, CODEC_NAMES)):
            if not values:
                raise ValueError(f"{name} list is empty")
            for v in values:
                if v not in known:
                    raise ValueError(f"unknown {name} {v!r}; expected one of {known}")
        if not self.m_values or min(self.m_values) < 1:
            raise ValueError("m_values must be a non-empty list of integers >= 1")
        if not self.seeds:
            raise ValueError("seeds list is empty")


def _load_plan_corpus(plan: ExperimentPlan) -> Corpus:
    if plan.corpus_path is not None:
        return ingest_corpus(plan.corpus_path, stopwords=plan.stopwords)
    return generate_synthetic(plan.synthetic)


def _fmt(value: float) -> str:
    return f"{value:.3f}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _build_indexes(c: Corpus, policy: str, scheme: str, m: int, seed: int) -> list[ShardIndex]:
    if policy == "m-slice":
        return build_sliced_indexes(c, make_ordering(scheme, c.documents, seed), m)
    return build_shard_indexes(c, make_assignment(policy, c, m, seed), scheme, seed)


def run_experiment(plan: ExperimentPlan) -> dict[str, Path]:
    """Run the sweep; returns the paths of the CSV files written.

    Each (policy, scheme, m, seed) index is built once and measured under
    every codec; output rows nonetheless follow the plan's cartesian
    (policy, scheme, codec, m, seed) order.
    """
    c = _load_plan_corpus(plan)
    queries = None
    if plan.queries_path is not None:
        queries = load_queries(plan.queries_path, c.vocab)

    size_by_key: dict[tuple, list] = {}
    surrogate_by_key: dict[tuple, list] = {}
    for policy, scheme, m, seed in itertools.product(
            plan.policies, plan.schemes, plan.m_values, plan.seeds):
        indexes = _build_indexes(c, policy, scheme, m, seed)
        for codec in plan.codecs:
            report = bits_per_posting(indexes, CodecSpec.from_name(codec))
            size_by_key[(policy, scheme, codec, m, seed)] = [
                policy, scheme, codec, m, seed, c.n_docs, report.postings,
                report.total_bits, _fmt(report.overhead_bits),
                _fmt(report.bpp), _fmt(report.bpp_oh)]
        # Surrogates depend only on list lengths, not the intra-shard order,
        # so one scheme's build serves the (policy, m, seed) row.
        if queries is not None and policy != "m-slice" and scheme == plan.schemes[0]:
            report = average_surrogates(queries, indexes, policy_tag=policy)
            surrogate_by_key[(policy, m, seed)] = [
                policy, m, seed, _fmt(report.avg_td), _fmt(report.avg_tc),
                report.queries_evaluated]

    size_rows = [size_by_key[key] for key in itertools.product(
        plan.policies, plan.schemes, plan.codecs, plan.m_values, plan.seeds)]

    outdir = Path(plan.outdir)
    written: dict[str, Path] = {}
    sizes_path = outdir / "sizes.csv"
    _write_csv(sizes_path, SIZE_HEADER, size_rows)
    written["sizes"] = sizes_path

    if queries is not None:
        surrogate_rows = [surrogate_by_key[key] for key in itertools.product(
            plan.policies, plan.m_values, plan.seeds) if key in surrogate_by_key]
        surrogates_path = outdir / "surrogates.csv"
        _write_csv(surrogates_path, SURROGATE_HEADER, surrogate_rows)
        written["surrogates"] = surrogates_path

    return written


def fit_loglog_slope(csv_path: str | Path, x_col: str, y_col: str) -> float:
    """Least-squares slope of log2(y) against log2(x) over the CSV rows."""
    xs: list[float] = []
    ys: list[float] = []
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (x_col, y_col):
            if col not in header:
                raise ValueError(f"column {col!r} not in {csv_path} (have {header})")
        for row in reader:
            x, y = float(row[x_col]), float(row[y_col])
            if x <= 0 or y <= 0:
                raise ValueError(f"log-log fit needs positive values, got ({x}, {y})")
            xs.append(x)
            ys.append(y)
    if len(set(xs)) < 2:
        raise ValueError("log-log fit needs at least two distinct x values")
    slope, _ = np.polyfit(np.log2(xs), np.log2(ys), 1)
    return float(slope)


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def read_config(path: str | Path) -> dict[str, str]:
    """Flat key=value lines; blank lines and #-comments ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"{path}: line {lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


_SYNTH_KEYS = {
    "docs": ("n_docs", int),
    "hosts": ("n_hosts", int),
    "vocab-global": ("vocab_global", int),
    "vocab-per-host": ("vocab_per_host", int),
    "doc-len": ("doc_len_mean", int),
    "locality": ("host_locality", float),
    "zipf": ("zipf_exponent", float),
    "drift": ("drift", float),
    "synth-seed": ("seed", int),
}


def _add_synth_args(parser: argparse.ArgumentParser) -> None:
    defaults = SyntheticSpec()
    for flag, (attr, conv) in _SYNTH_KEYS.items():
        parser.add_argument(f"--{flag}", type=conv, default=None,
                            help=f"synthetic corpus {attr} (default {getattr(defaults, attr)})")


def _synth_spec_from(args_vars: dict[str, object]) -> SyntheticSpec | None:
    overrides = {}
    for flag, (attr, conv) in _SYNTH_KEYS.items():
        raw = args_vars.get(flag.replace("-", "_"))
        if raw is not None:
            overrides[attr] = conv(raw)
    return replace(SyntheticSpec(), **overrides) if overrides else None


def _cmd_ingest(args: argparse.Namespace) -> int:
    c = ingest_corpus(args.corpus, stopwords=args.stopwords)
    docs, terms, postings = corpus_stats(c)
    print(f"docs={docs} terms={terms} postings={postings}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = _synth_spec_from(vars(args)) or SyntheticSpec()
    c = generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for d in c.documents:
            body = " ".join(c.vocab.token_of(t) for t in d.terms)
            fh.write(f"{d.url}\t{body}\n")
    docs, terms, postings = corpus_stats(c)
    print(f"wrote {out}: docs={docs} terms={terms} postings={postings}")
    return 0


def _plan_from_args(args: argparse.Namespace) -> ExperimentPlan:
    values: dict[str, object] = {}
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for key, value in vars(args).items():
        if key in ("config", "command", "func") or value is None:
            continue
        values[key.replace("_", "-")] = value

    # Config values arrive as strings; synth keys are coerced explicitly.
    synth_overrides = {}
    for flag, (attr, conv) in _SYNTH_KEYS.items():
        raw = values.get(flag)
        if raw is not None:
            synth_overrides[attr] = conv(raw)
    synth = replace(SyntheticSpec(), **synth_overrides) if synth_overrides else None

    def listy(key: str, parse, default):
        raw = values.get(key)
        if raw is None:
            return default
        return raw if isinstance(raw, tuple) else parse(str(raw))

    corpus_path = values.get("corpus")
    if corpus_path is None and synth is None:
        synth = SyntheticSpec()  # default desk-scale corpus
    return ExperimentPlan(
        outdir=str(values.get("outdir", "results")),
        corpus_path=str(corpus_path) if corpus_path is not None else None,
        synthetic=synth,
        stopwords=str(values["stopwords"]) if values.get("stopwords") is not None else None,
        schemes=listy("schemes", _parse_str_list, ("rnd", "url")),
        policies=listy("policies", _parse_str_list, ("random",)),
        codecs=listy("codecs", _parse_str_list, ("delta",)),
        m_values=listy("m-values", _parse_int_list, (1,)),
        seeds=listy("seeds", _parse_int_list, (0,)),
        queries_path=str(values["queries"]) if values.get("queries") is not None else None,
    )


def _cmd_experiment(args: argparse.Namespace) -> int:
    plan = _plan_from_args(args)
    written = run_experiment(plan)
    for kind, path in written.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_query_sim(args: argparse.Namespace) -> int:
    plan = ExperimentPlan(
        outdir=args.outdir,
        corpus_path=args.corpus,
        stopwords=args.stopwords,
        schemes=("rnd",),
        policies=_parse_str_list(args.policies),
        codecs=("delta",),
        m_values=_parse_int_list(args.m_values),
        seeds=_parse_int_list(args.seeds),
        queries_path=args.queries,
    )
    for policy in plan.policies:
        if policy == "m-slice":
            raise ValueError("query-sim supports assignment policies only (no scheme tag in output)")
    written = run_experiment(plan)
    print(f"surrogates: {written['surrogates']}")
    return 0


def _cmd_slope(args: argparse.Namespace) -> int:
    slope = fit_loglog_slope(args.csv, args.x, args.y)
    print(f"{slope:.3f}")
    return 0


def _verify_slice(args: argparse.Namespace) -> tuple[bool, list[list], list[str]]:
    td = TinyTermDoc.four_doc_instance()
    rows: list[list] = []
    ok = True
    for m in _parse_int_list(args.m_values):
        report = check_slice_monotonicity(td, m)
        passed = report.min_diff >= 0
        ok &= passed
        print(f"slice m={m}: {report.permutations} permutations, diff min/mean/max = "
              f"{report.min_diff}/{report.mean_diff:.3f}/{report.max_diff} -> {'PASS' if passed else 'FAIL'}")
        for perm in itertools.permutations(range(td.n_docs)):
            single = single_node_bits(td, perm)
            sliced = partitioned_bits(td, perm, slice_nodes(perm, m), m)
            rows.append([m, "".join(map(str, perm)), single, sliced, single - sliced])
    return ok, rows, ["m", "perm", "single_bits", "sliced_bits", "diff"]


def _verify_delta_m(args: argparse.Namespace) -> tuple[bool, list[list], list[str]]:
    td = TinyTermDoc.four_doc_instance()
    rows: list[list] = []
    ok = True
    previous = None
    for m in _parse_int_list(args.m_values):
        report = expected_partition_gain(td, m)
        chain_ok = previous is None or report.pair_expectation >= previous
        passed = report.identity_holds and report.pair_expectation >= 0 and chain_ok
        ok &= passed
        print(f"delta-m m={m}: pair={report.pair_expectation} slice={report.slice_expectation} "
              f"identity={'exact' if report.identity_holds else 'BROKEN'} -> {'PASS' if passed else 'FAIL'}")
        rows.append([m, report.permutations, report.partitions,
                     str(report.pair_expectation), str(report.slice_expectation),
                     int(report.identity_holds)])
        previous = report.pair_expectation
    return ok, rows, ["m", "permutations", "partitions", "pair_expectation", "slice_expectation", "identity"]


def _verify_url_example(args: argparse.Namespace) -> tuple[bool, list[list], list[str]]:
    costs = clustered_list_split(args.n1, args.n2, args.run, args.m)
    passed = costs.exact_increase >= 0
    print(f"url-example n1={args.n1} n2={args.n2} run={args.run} m={args.m}: "
          f"before={costs.before_bits} after={costs.after_bits} "
          f"exact_increase={costs.exact_increase} approx_increase={costs.approx_increase:.3f} "
          f"-> {'PASS' if passed else 'FAIL'}")
    rows = [[args.n1, args.n2, args.run, args.m, costs.before_bits, costs.after_bits,
             costs.exact_increase, _fmt(costs.approx_increase)]]
    return passed, rows, ["n1", "n2", "run_len", "m", "before_bits", "after_bits",
                          "exact_increase", "approx_increase"]


def _verify_urn(args: argparse.Namespace) -> tuple[bool, list[list], list[str]]:
    spec = UrnTrialSpec(balls=args.balls, urns=args.urns, epsilon=args.epsilon,
                        trials=args.trials, seed=args.seed)
    result = simulate_max_load(spec)
    passed = result.coverage > 1 - spec.epsilon and result.min_max_load >= spec.balls / spec.urns
    print(f"urn balls={spec.balls} urns={spec.urns} eps={spec.epsilon}: delta={result.delta:.4f} "
          f"(tail bound {'valid' if result.chernoff_valid else 'OUT OF RANGE'}), "
          f"coverage={result.coverage:.4f} over {spec.trials} trials, "
          f"min/mean max-load={result.min_max_load}/{result.mean_max_load:.1f} "
          f"-> {'PASS' if passed else 'FAIL'}")
    rows = [[spec.balls, spec.urns, spec.epsilon, spec.trials, spec.seed,
             f"{result.delta:.6f}", int(result.chernoff_valid), _fmt(result.bound),
             f"{result.coverage:.4f}", result.min_max_load, _fmt(result.mean_max_load)]]
    return passed, rows, ["balls", "urns", "epsilon", "trials", "seed", "delta",
                          "chernoff_valid", "bound", "coverage", "min_max_load", "mean_max_load"]


def _cmd_verify(args: argparse.Namespace) -> int:
    runner = {"slice": _verify_slice, "delta-m": _verify_delta_m,
              "url-example": _verify_url_example, "urn": _verify_urn}[args.target]
    ok, rows, header = runner(args)
    if args.csv:
        _write_csv(Path(args.csv), header, rows)
        print(f"raw numbers: {args.csv}")
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shardlab",
                                     description="Index partitioning vs docId-assignment compression, at desk scale.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a corpus file and print its statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--stopwords", default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic corpus file")
    p.add_argument("--out", required=True)
    _add_synth_args(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("experiment", help="run a (policy x scheme x codec x m x seed) sweep")
    p.add_argument("--config", default=None, help="flat key=value file; flags override")
    p.add_argument("--corpus", default=None)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--outdir", default=None)
    p.add_argument("--schemes", type=_parse_str_list, default=None)
    p.add_argument("--policies", type=_parse_str_list, default=None)
    p.add_argument("--codecs", type=_parse_str_list, default=None)
    p.add_argument("--m-values", type=_parse_int_list, default=None)
    p.add_argument("--seeds", type=_parse_int_list, default=None)
    p.add_argument("--queries", default=None)
    _add_synth_args(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("query-sim", help="query-time surrogates per (policy, m, seed)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--queries", required=True)
    p.add_argument("--policies", default="random")
    p.add_argument("--m-values", default="1")
    p.add_argument("--seeds", default="0")
    p.add_argument("--outdir", default="results")
    p.set_defaults(func=_cmd_query_sim)

    p = sub.add_parser("verify", help="run the analytical checks")
    p.add_argument("target", choices=["slice", "delta-m", "url-example", "urn"])
    p.add_argument("--m-values", default="2,4", help="slice / delta-m shard counts")
    p.add_argument("--n1", type=int, default=2**20)
    p.add_argument("--n2", type=int, default=2**20)
    p.add_argument("--run", type=int, default=2**10)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--balls", type=int, default=10**5)
    p.add_argument("--urns", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=10**4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="write raw numbers to this CSV")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("slope", help="log-log least-squares slope of two CSV columns")
    p.add_argument("--csv", required=True)
    p.add_argument("--x", default="m")
    p.add_argument("--y", default="avg_td")
    p.set_defaults(func=_cmd_slope)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
