"""Document-to-shard distribution policies and m-slice partitioning.

Every policy yields a total map doc_key -> shard id in 0..m-1; shards are
disjoint and cover the corpus, so the overall posting count is invariant
under any assignment.  Slice policies keep shard sizes within one of each
other via the floor(rank*m/n) rule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .ordering import Ordering, order_ih_url, order_url
from .util import mix64, mix64_array

POLICIES = ("random", "round-robin", "url-slice", "ih-url-slice", "m-slice")


@dataclass(frozen=True, eq=False)
class ShardAssignment:
    """assign[doc_key] is the shard id of that document."""

    m: int
    assign: np.ndarray
    policy: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("shard count m must be >= 1")
        if self.assign.size and (self.assign.min() < 0 or self.assign.max() >= self.m):
            raise ValueError("shard ids out of range")

    def shard_of(self, doc_key: int) -> int:
        return int(self.assign[doc_key])

    def shard_sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.m)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["doc_key", "shard"])
            for key, shard in enumerate(self.assign):
                writer.writerow([key, int(shard)])


def distribute_random(c: Corpus, m: int, seed: int) -> ShardAssignment:
    """Independently uniform via a seeded 64-bit mix of doc_key."""
    if m < 1:
        raise ValueError("shard count m must be >= 1")
    keys = np.arange(c.n_docs, dtype=np.uint64)
    hashed = mix64_array(keys ^ np.uint64(mix64(seed)))
    assign = (hashed % np.uint64(m)).astype(np.int32)
    return ShardAssignment(m=m, assign=assign, policy="random", seed=seed)


def distribute_round_robin(c: Corpus, m: int) -> ShardAssignment:
    if m < 1:
        raise ValueError("shard count m must be >= 1")
    assign = (np.arange(c.n_docs) % m).astype(np.int32)
    return ShardAssignment(m=m, assign=assign, policy="round-robin")


def _slice_by_rank(ranked_doc_keys: np.ndarray, m: int, n: int) -> np.ndarray:
    assign = np.empty(n, dtype=np.int32)
    ranks = np.arange(n, dtype=np.int64)
    assign[ranked_doc_keys] = (ranks * m // n).astype(np.int32)
    return assign


def distribute_url_slice(c: Corpus, m: int) -> ShardAssignment:
    """URL-rank r goes to shard floor(r*m/n): even contiguous slices."""
    if m < 1:
        raise ValueError("shard count m must be >= 1")
    ranked = order_url(c.documents).doc_keys
    return ShardAssignment(m=m, assign=_slice_by_rank(ranked, m, c.n_docs), policy="url-slice")


def distribute_ih_url_slice(c: Corpus, m: int, seed: int) -> ShardAssignment:
    """Like url-slice, but ranking hosts randomly (URL order within hosts)."""
    if m < 1:
        raise ValueError("shard count m must be >= 1")
    ranked = order_ih_url(c.documents, seed).doc_keys
    return ShardAssignment(m=m, assign=_slice_by_rank(ranked, m, c.n_docs), policy="ih-url-slice", seed=seed)


def slice_m(ordering: Ordering, m: int) -> ShardAssignment:
    """Cut a whole-corpus ordering into m consecutive slices.

    With m dividing n this is the canonical equal slicing; other n are
    supported as an extension via the same floor(rank*m/n) rule.
    """
    if m < 1:
        raise ValueError("shard count m must be >= 1")
    n = ordering.n
    return ShardAssignment(m=m, assign=_slice_by_rank(ordering.doc_keys, m, n), policy="m-slice", seed=ordering.seed)


def make_assignment(policy: str, c: Corpus, m: int, seed: int = 0) -> ShardAssignment:
    """Dispatch for the assignment policies (m-slice needs an Ordering; use slice_m)."""
    if policy == "random":
        return distribute_random(c, m, seed)
    if policy == "round-robin":
        return distribute_round_robin(c, m)
    if policy == "url-slice":
        return distribute_url_slice(c, m)
    if policy == "ih-url-slice":
        return distribute_ih_url_slice(c, m, seed)
    raise ValueError(f"unknown distribution policy {policy!r}; expected one of {POLICIES[:-1]}")
