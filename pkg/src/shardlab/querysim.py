"""Query-processing-time surrogates over a partitioned index.

Query evaluation must wait for the slowest shard, so both surrogates take a
max over shards: the disjunctive surrogate charges a shard the summed length
of the query terms' postings lists there (full scans), the conjunctive one
charges the length of the shortest list (join driven by the rarest term).
Neither claims to equal running time; they track it for RAM-resident indexes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import Vocabulary, tokenize
from .invindex import ShardIndex

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Query:
    """Deduplicated in-vocabulary term ids; empty means not evaluable."""

    raw: str
    terms: tuple[int, ...]

    @property
    def evaluable(self) -> bool:
        return len(self.terms) > 0


@dataclass(frozen=True)
class SurrogateReport:
    per_query: tuple[tuple[int, int], ...]  # (T_d, T_c) per evaluable query
    avg_td: float
    avg_tc: float
    m: int
    policy_tag: str
    queries_evaluated: int
    queries_excluded: int


def load_queries(path: str | Path, vocab: Vocabulary) -> list[Query]:
    """One query per line, tokenized exactly like documents.

    Out-of-vocabulary tokens are dropped; queries losing every token stay in
    the returned list flagged as unevaluable (averages skip them).  An empty
    file is an error.
    """
    queries: list[Query] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        raw = line.strip()
        if not raw:
            continue
        ids = {vocab.id_of(t) for t in tokenize(raw)}
        ids.discard(None)
        query = Query(raw=raw, terms=tuple(sorted(ids)))  # type: ignore[arg-type]
        if not query.evaluable:
            log.warning("query %r has no in-vocabulary terms; excluded from averages", raw)
        queries.append(query)
    if not queries:
        raise ValueError(f"query file {path} is empty")
    return queries


def disjunctive_time(q: Query, indexes: Sequence[ShardIndex]) -> int:
    """T_d: max over shards of the summed query-term list lengths."""
    if not q.evaluable:
        raise ValueError("query has no in-vocabulary terms")
    return max(sum(idx.list_length(t) for t in q.terms) for idx in indexes)


def conjunctive_time(q: Query, indexes: Sequence[ShardIndex]) -> int:
    """T_c: max over shards of the shortest query-term list length.

    A term absent from a shard contributes length 0 there (the join yields
    nothing on that shard).
    """
    if not q.evaluable:
        raise ValueError("query has no in-vocabulary terms")
    return max(min(idx.list_length(t) for t in q.terms) for idx in indexes)


def average_surrogates(queries: Sequence[Query], indexes: Sequence[ShardIndex],
                       policy_tag: str = "") -> SurrogateReport:
    """Arithmetic means of (T_d, T_c) over the evaluable queries."""
    evaluable = [q for q in queries if q.evaluable]
    if not evaluable:
        raise ValueError("no evaluable queries")
    pairs = tuple((disjunctive_time(q, indexes), conjunctive_time(q, indexes)) for q in evaluable)
    n = len(pairs)
    return SurrogateReport(
        per_query=pairs,
        avg_td=sum(td for td, _ in pairs) / n,
        avg_tc=sum(tc for _, tc in pairs) / n,
        m=len(indexes),
        policy_tag=policy_tag,
        queries_evaluated=n,
        queries_excluded=len(queries) - n,
    )
