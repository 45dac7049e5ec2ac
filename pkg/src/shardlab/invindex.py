"""Per-shard inverted indexes: local docId numbering and postings lists.

A shard index stores its postings in one contiguous (term, docid) array pair
sorted by term, with docids ascending inside each term run.  That layout keeps
whole-shard size accounting vectorizable while still exposing per-term
postings lists.  Local docIds are 1-based so the first element of every list
has a well-defined gap encoding.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from .corpus import Corpus
from .ordering import Ordering, make_ordering, shard_seed, SCHEMES
from .sharding import ShardAssignment


@dataclass(frozen=True)
class PostingsList:
    """Strictly ascending positive docids of one term."""

    term: int
    docids: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.docids)
        if d.size == 0:
            raise ValueError("a postings list holds at least one docid")
        if int(d[0]) < 1 or (d.size > 1 and not (np.diff(d) > 0).all()):
            raise ValueError("docids must be strictly ascending and >= 1")

    def __len__(self) -> int:
        return len(self.docids)


class ShardIndex:
    """Immutable postings of one shard; safe for concurrent readers."""

    def __init__(self, shard_id: int, n_docs: int, terms: np.ndarray, docids: np.ndarray):
        order = np.argsort(terms, kind="stable")
        self.shard_id = shard_id
        self.n_docs = int(n_docs)
        self._terms = terms[order]
        self._docids = docids[order]
        if self._terms.size:
            boundaries = np.flatnonzero(np.diff(self._terms)) + 1
            self._starts = np.concatenate(([0], boundaries, [self._terms.size]))
            self._dist_terms = self._terms[self._starts[:-1]]
        else:
            self._starts = np.zeros(1, dtype=np.int64)
            self._dist_terms = self._terms

    @property
    def n_postings(self) -> int:
        return int(self._terms.size)

    @property
    def n_terms(self) -> int:
        return int(self._dist_terms.size)

    @property
    def dictionary(self) -> np.ndarray:
        """Distinct term ids present on this shard, ascending."""
        return self._dist_terms

    def _run(self, term: int) -> tuple[int, int] | None:
        pos = int(np.searchsorted(self._dist_terms, term))
        if pos == len(self._dist_terms) or self._dist_terms[pos] != term:
            return None
        return int(self._starts[pos]), int(self._starts[pos + 1])

    def list_length(self, term: int) -> int:
        run = self._run(term)
        return 0 if run is None else run[1] - run[0]

    def postings(self, term: int) -> PostingsList | None:
        run = self._run(term)
        if run is None:
            return None
        return PostingsList(term=term, docids=self._docids[run[0]:run[1]])

    def items(self) -> Iterator[tuple[int, np.ndarray]]:
        for i, term in enumerate(self._dist_terms):
            yield int(term), self._docids[self._starts[i]:self._starts[i + 1]]

    def first_and_gaps(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-run encoder input: first docid then dGaps, plus run starts.

        Returns (values, starts) where values[starts[i]:starts[i+1]] is the
        (d1, gaps...) sequence of the i-th term.
        """
        vals = self._docids.astype(np.int64)
        if vals.size:
            gaps = np.empty_like(vals)
            gaps[0] = vals[0]
            gaps[1:] = vals[1:] - vals[:-1]
            gaps[self._starts[:-1]] = vals[self._starts[:-1]]
            vals = gaps
        return vals, self._starts

    def dump(self, out: TextIO) -> None:
        """Debug format: one 'term<TAB>docid,docid,...' line per term."""
        for term, docids in self.items():
            out.write(f"{term}\t{','.join(str(int(d)) for d in docids)}\n")

    def dump_path(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.dump(fh)


def _index_from_ordered_docs(shard_id: int, doc_keys_in_order: np.ndarray, c: Corpus) -> ShardIndex:
    keys = np.asarray(doc_keys_in_order, dtype=np.int64)
    if keys.size == 0:
        empty = np.empty(0, dtype=np.int32)
        return ShardIndex(shard_id, 0, empty, empty)
    offsets = c.doc_offsets
    lens = (offsets[keys + 1] - offsets[keys]).astype(np.int64)
    total = int(lens.sum())
    out_offsets = np.concatenate(([0], np.cumsum(lens)))
    gather = np.arange(total, dtype=np.int64) - np.repeat(out_offsets[:-1], lens) + np.repeat(offsets[keys], lens)
    terms = c.term_flat[gather]
    docids = np.repeat(np.arange(1, keys.size + 1, dtype=np.int32), lens)
    return ShardIndex(shard_id, keys.size, terms, docids)


def build_shard_indexes(c: Corpus, g: ShardAssignment, scheme: str, seed: int = 0) -> list[ShardIndex]:
    """Distribute-then-order pipeline: order each shard's documents locally.

    The scheme draws an independent per-shard seed stream; empty shards
    yield empty indexes.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown ordering scheme {scheme!r}; expected one of {SCHEMES}")
    by_shard = np.argsort(g.assign, kind="stable")
    sizes = np.bincount(g.assign, minlength=g.m)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    indexes = []
    for j in range(g.m):
        members = by_shard[bounds[j]:bounds[j + 1]]
        if members.size == 0:
            empty = np.empty(0, dtype=np.int32)
            indexes.append(ShardIndex(j, 0, empty, empty))
            continue
        docs = [c.documents[k] for k in members]
        ordering = make_ordering(scheme, docs, shard_seed(seed, j))
        indexes.append(_index_from_ordered_docs(j, ordering.doc_keys, c))
    return indexes


def build_sliced_indexes(c: Corpus, ordering: Ordering, m: int) -> list[ShardIndex]:
    """Order-then-slice pipeline: cut a whole-corpus ordering into m slices.

    Local docIds are ranks within the slice, so each slice's internal order
    respects the global ordering; m=1 reproduces the single-node index.
    """
    if ordering.n != c.n_docs:
        raise ValueError("ordering must cover the whole corpus")
    if m < 1:
        raise ValueError("shard count m must be >= 1")
    n = ordering.n
    ranks = np.arange(n, dtype=np.int64)
    cut = np.searchsorted(ranks * m // n, np.arange(m + 1), side="left")
    return [
        _index_from_ordered_docs(j, ordering.doc_keys[cut[j]:cut[j + 1]], c)
        for j in range(m)
    ]
