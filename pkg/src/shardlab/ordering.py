"""docId assignment: bijections from a document set onto local ids 1..n.

Five schemes are provided, selectable by name:

* ``rnd``       -- uniformly random permutation (baseline).
* ``url``       -- lexicographic on (reversed-host, remainder) sort keys.
* ``ih-url``    -- hosts randomly ordered, URL order kept inside each host.
* ``ih-rnd``    -- hosts randomly ordered, random order inside each host.
* ``kscn-tsp``  -- capacity-bounded greedy clustering seeded by term-rich
                   documents, then a greedy nearest-neighbor path inside each
                   cluster; clusters concatenated in creation order.

Every scheme is a pure function of (document set, seed): results do not
depend on input order, and orderings for different shards can be computed
concurrently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document
from .util import derive_seed

SCHEMES = ("rnd", "url", "ih-url", "ih-rnd", "kscn-tsp")


@dataclass(frozen=True, order=True)
class UrlSortKey:
    """Comparison key: host labels reversed, path untouched.

    Comparison is tuple-lexicographic on (reversed_host, remainder); plain
    str comparison equals UTF-8 byte order, keeping results locale-free.
    """

    reversed_host: str
    remainder: str


def url_sort_key(url: str) -> UrlSortKey:
    rest = url.split("://", 1)[-1]
    host, sep, tail = rest.partition("/")
    if not host:
        raise ValueError(f"URL has no host: {url!r}")
    return UrlSortKey(".".join(reversed(host.split("."))), sep + tail)


@dataclass(frozen=True, eq=False)
class Ordering:
    """doc_keys[i] is the document holding local docId i+1."""

    doc_keys: np.ndarray
    scheme: str
    seed: int | None = None

    def __post_init__(self) -> None:
        if len(self.doc_keys) == 0:
            raise ValueError("an ordering needs at least one document")
        if len(np.unique(self.doc_keys)) != len(self.doc_keys):
            raise ValueError("ordering is not a bijection: repeated doc_key")

    @property
    def n(self) -> int:
        return len(self.doc_keys)

    def mapping(self) -> dict[int, int]:
        """doc_key -> local docId in 1..n."""
        return {int(k): i + 1 for i, k in enumerate(self.doc_keys)}

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["doc_key", "docid"])
            for i, k in enumerate(self.doc_keys):
                writer.writerow([int(k), i + 1])


def _require_docs(docs: Sequence[Document]) -> list[Document]:
    if not docs:
        raise ValueError("cannot order an empty document set")
    return sorted(docs, key=lambda d: d.doc_key)


def order_random(docs: Sequence[Document], seed: int) -> Ordering:
    canon = _require_docs(docs)
    keys = np.array([d.doc_key for d in canon], dtype=np.int64)
    perm = np.random.default_rng(seed).permutation(len(keys))
    return Ordering(doc_keys=keys[perm], scheme="rnd", seed=seed)


def order_url(docs: Sequence[Document]) -> Ordering:
    canon = _require_docs(docs)
    ranked = sorted(canon, key=lambda d: (url_sort_key(d.url), d.doc_key))
    return Ordering(doc_keys=np.array([d.doc_key for d in ranked], dtype=np.int64), scheme="url")


def _hosts_shuffled(canon: list[Document], rng: np.random.Generator) -> list[list[Document]]:
    by_host: dict[str, list[Document]] = {}
    for d in canon:
        by_host.setdefault(d.host, []).append(d)
    hosts = sorted(by_host)
    order = rng.permutation(len(hosts))
    return [by_host[hosts[i]] for i in order]


def order_ih_url(docs: Sequence[Document], seed: int) -> Ordering:
    canon = _require_docs(docs)
    rng = np.random.default_rng(seed)
    out: list[int] = []
    for members in _hosts_shuffled(canon, rng):
        out.extend(d.doc_key for d in sorted(members, key=lambda d: (url_sort_key(d.url), d.doc_key)))
    return Ordering(doc_keys=np.array(out, dtype=np.int64), scheme="ih-url", seed=seed)


def order_ih_rnd(docs: Sequence[Document], seed: int) -> Ordering:
    canon = _require_docs(docs)
    rng = np.random.default_rng(seed)
    out: list[int] = []
    for members in _hosts_shuffled(canon, rng):
        keys = np.array([d.doc_key for d in members], dtype=np.int64)
        out.extend(keys[rng.permutation(len(keys))])
    return Ordering(doc_keys=np.array(out, dtype=np.int64), scheme="ih-rnd", seed=seed)


def _similarity(a: frozenset[int], b: frozenset[int]) -> int:
    return len(a & b)


def order_kscn_tsp(docs: Sequence[Document], seed: int = 0) -> Ordering:
    """Cluster with capacity-bounded greedy scans, then chain each cluster.

    K = round(sqrt(n)) clusters of capacity ceil(n/K).  Each round seeds a
    cluster with the unassigned document owning the largest term set and
    fills it with the documents most similar to that seed (similarity =
    term-set intersection size, ties to the smaller doc_key); the final
    cluster absorbs any remainder.  Inside a cluster, docIds follow a greedy
    nearest-neighbor path starting at the seed.  The procedure is
    deterministic; seed is recorded for interface uniformity only.
    """
    canon = _require_docs(docs)
    n = len(canon)
    term_sets = {d.doc_key: frozenset(d.terms) for d in canon}
    k_clusters = max(1, round(math.sqrt(n)))
    capacity = -(-n // k_clusters)

    remaining = {d.doc_key for d in canon}
    out: list[int] = []
    for round_idx in range(k_clusters):
        if not remaining:
            break
        centroid = max(remaining, key=lambda k: (len(term_sets[k]), -k))
        remaining.discard(centroid)
        if round_idx == k_clusters - 1:
            members = sorted(remaining)
        else:
            ranked = sorted(remaining, key=lambda k: (-_similarity(term_sets[centroid], term_sets[k]), k))
            members = ranked[: capacity - 1]
        remaining.difference_update(members)

        cluster = set(members)
        path = [centroid]
        current = centroid
        while cluster:
            current = max(cluster, key=lambda k: (_similarity(term_sets[current], term_sets[k]), -k))
            cluster.discard(current)
            path.append(current)
        out.extend(path)

    return Ordering(doc_keys=np.array(out, dtype=np.int64), scheme="kscn-tsp", seed=seed)


def make_ordering(scheme: str, docs: Sequence[Document], seed: int = 0) -> Ordering:
    """Dispatch by scheme name; seed is ignored by the deterministic schemes."""
    if scheme == "rnd":
        return order_random(docs, seed)
    if scheme == "url":
        return order_url(docs)
    if scheme == "ih-url":
        return order_ih_url(docs, seed)
    if scheme == "ih-rnd":
        return order_ih_rnd(docs, seed)
    if scheme == "kscn-tsp":
        return order_kscn_tsp(docs, seed)
    raise ValueError(f"unknown ordering scheme {scheme!r}; expected one of {SCHEMES}")


def shard_seed(seed: int, shard_id: int) -> int:
    """Per-shard sub-seed so shard orderings draw independent streams."""
    return derive_seed(seed, shard_id)
