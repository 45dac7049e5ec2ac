"""Mechanical verification of the analytical size and load claims.

Everything here runs at desk scale with exact arithmetic:

* slicing a permutation into m consecutive equal parts never increases the
  aggregate Elias-delta postings size (checked over every permutation of a
  tiny incidence instance);
* the expected gain of random equal partitioning equals the expected gain of
  slicing, computed by full enumeration over (permutation, partition) pairs
  versus permutations alone -- exactly, as rationals;
* a clustered postings list (rare long gaps separating runs of 1-gaps) grows
  when split across m nodes, with the exact and log-approximated growth;
* the maximum load of b balls tossed into m urns stays within (b/m)(1+delta)
  with probability > 1-epsilon for delta >= sqrt((4m/b) ln(m/epsilon)),
  validated by Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .codecs import delta_len

CHERNOFF_DELTA_LIMIT = 2 * math.e - 1  # the max-load bound needs delta below this

_EXHAUSTIVE_DOC_LIMIT = 8


class SliceCounterexampleError(AssertionError):
    """A permutation where slicing increased the aggregate size (impossible
    for a monotone per-gap code; raised only to name the counterexample)."""

    def __init__(self, perm: tuple[int, ...], single: int, sliced: int):
        super().__init__(f"slicing grew permutation {perm}: {single} -> {sliced} bits")
        self.perm = perm


@dataclass(frozen=True)
class TinyTermDoc:
    """A term-document incidence small enough for exhaustive enumeration."""

    n_docs: int
    term_docs: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if not (1 <= self.n_docs <= _EXHAUSTIVE_DOC_LIMIT):
            raise ValueError(f"exhaustive mode caps instances at {_EXHAUSTIVE_DOC_LIMIT} documents")
        for docs in self.term_docs:
            if not docs or min(docs) < 0 or max(docs) >= self.n_docs:
                raise ValueError("each term needs a non-empty doc set within range")

    @staticmethod
    def four_doc_instance() -> "TinyTermDoc":
        """The running example: t0 in {0,2}, t1 in {1,3}, t2 everywhere."""
        return TinyTermDoc(4, (frozenset({0, 2}), frozenset({1, 3}),
                               frozenset({0, 1, 2, 3})))


def _list_bits(docids: Sequence[int]) -> int:
    bits = 0
    prev = 0
    for d in docids:
        bits += delta_len(d - prev)
        prev = d
    return bits


def _single_bits(term_docs: Sequence[frozenset[int]], perm: Sequence[int]) -> int:
    docid_of = {doc: pos + 1 for pos, doc in enumerate(perm)}
    return sum(_list_bits(sorted(docid_of[d] for d in docs)) for docs in term_docs)


def _partitioned_bits(term_docs: Sequence[frozenset[int]], perm: Sequence[int],
                      node_of: Sequence[int], m: int) -> int:
    members: list[list[int]] = [[] for _ in range(m)]
    for doc in perm:
        members[node_of[doc]].append(doc)
    total = 0
    for node_docs in members:
        docid_of = {doc: pos + 1 for pos, doc in enumerate(node_docs)}
        for docs in term_docs:
            local = sorted(docid_of[d] for d in docs if d in docid_of)
            total += _list_bits(local)
    return total


def single_node_bits(td: TinyTermDoc, perm: Sequence[int]) -> int:
    """Aggregate Elias-delta bits with docIds assigned by perm on one node."""
    return _single_bits(td.term_docs, perm)


def partitioned_bits(td: TinyTermDoc, perm: Sequence[int], node_of: Sequence[int], m: int) -> int:
    """Aggregate bits over m nodes; each node orders its documents by perm."""
    return _partitioned_bits(td.term_docs, perm, node_of, m)


def slice_nodes(perm: Sequence[int], m: int) -> list[int]:
    """node_of map for the m-slice partition of perm (rank r -> r*m//n)."""
    n = len(perm)
    node_of = [0] * n
    for rank, doc in enumerate(perm):
        node_of[doc] = rank * m // n
    return node_of


@dataclass(frozen=True)
class SliceMonotonicityReport:
    m: int
    permutations: int
    min_diff: int
    max_diff: int
    mean_diff: float
    sampled: bool = False  # True when drawn from a seeded sample, not proven


def check_slice_monotonicity(td: TinyTermDoc, m: int) -> SliceMonotonicityReport:
    """Verify single-node size >= m-sliced size for every permutation.

    Raises SliceCounterexampleError naming the first offending permutation
    if one exists (none can, under a monotone per-gap code).
    """
    if td.n_docs % m:
        raise ValueError("m must divide the document count")
    diffs = []
    for perm in itertools.permutations(range(td.n_docs)):
        single = single_node_bits(td, perm)
        sliced = partitioned_bits(td, perm, slice_nodes(perm, m), m)
        if single < sliced:
            raise SliceCounterexampleError(perm, single, sliced)
        diffs.append(single - sliced)
    return SliceMonotonicityReport(
        m=m,
        permutations=len(diffs),
        min_diff=min(diffs),
        max_diff=max(diffs),
        mean_diff=sum(diffs) / len(diffs),
    )


def sample_slice_monotonicity(n_docs: int, term_docs: Sequence[frozenset[int]], m: int,
                              permutations: int = 1000, seed: int = 0) -> SliceMonotonicityReport:
    """Seeded-sample variant of the slicing check for instances beyond the
    exhaustive cap; same per-permutation assertion, but the result is a
    sampled observation rather than a proof."""
    if n_docs % m:
        raise ValueError("m must divide the document count")
    for docs in term_docs:
        if not docs or min(docs) < 0 or max(docs) >= n_docs:
            raise ValueError("each term needs a non-empty doc set within range")
    rng = np.random.default_rng(seed)
    diffs = []
    for _ in range(permutations):
        perm = tuple(int(x) for x in rng.permutation(n_docs))
        single = _single_bits(term_docs, perm)
        sliced = _partitioned_bits(term_docs, perm, slice_nodes(perm, m), m)
        if single < sliced:
            raise SliceCounterexampleError(perm, single, sliced)
        diffs.append(single - sliced)
    return SliceMonotonicityReport(
        m=m,
        permutations=len(diffs),
        min_diff=min(diffs),
        max_diff=max(diffs),
        mean_diff=sum(diffs) / len(diffs),
        sampled=True,
    )


def equal_partitions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """All node_of maps splitting 0..n-1 into m labeled groups of n/m."""
    if n % m:
        raise ValueError("m must divide n")
    size = n // m
    node_of = [0] * n

    def fill(node: int, remaining: frozenset[int]) -> Iterator[tuple[int, ...]]:
        if node == m:
            yield tuple(node_of)
            return
        rest = sorted(remaining)
        for group in itertools.combinations(rest, size):
            for doc in group:
                node_of[doc] = node
            yield from fill(node + 1, remaining.difference(group))

    yield from fill(0, frozenset(range(n)))


@dataclass(frozen=True)
class PartitionGainReport:
    m: int
    permutations: int
    partitions: int
    pair_expectation: Fraction     # E over (perm, equal partition) of size gain
    slice_expectation: Fraction    # E over perm of the m-slice size gain
    identity_holds: bool


def expected_partition_gain(td: TinyTermDoc, m: int) -> PartitionGainReport:
    """Both expectation forms of the random-partitioning size gain, exactly.

    The pair form averages single-node minus partitioned size over every
    (permutation, labeled equal partition); the slice form averages over
    permutations with the deterministic m-slice partition.  The two must
    agree exactly: fixing a partition and concatenating its per-node orders
    maps permutations 1:1 onto permutations.
    """
    if td.n_docs % m:
        raise ValueError("m must divide the document count")
    perms = list(itertools.permutations(range(td.n_docs)))
    singles = {perm: single_node_bits(td, perm) for perm in perms}

    pair_sum = 0
    n_partitions = 0
    for node_of in equal_partitions(td.n_docs, m):
        n_partitions += 1
        for perm in perms:
            pair_sum += singles[perm] - partitioned_bits(td, perm, node_of, m)

    slice_sum = 0
    for perm in perms:
        slice_sum += singles[perm] - partitioned_bits(td, perm, slice_nodes(perm, m), m)

    pair_expectation = Fraction(pair_sum, len(perms) * n_partitions)
    slice_expectation = Fraction(slice_sum, len(perms))
    return PartitionGainReport(
        m=m,
        permutations=len(perms),
        partitions=n_partitions,
        pair_expectation=pair_expectation,
        slice_expectation=slice_expectation,
        identity_holds=pair_expectation == slice_expectation,
    )


@dataclass(frozen=True)
class ClusteredSplitCosts:
    """Size of one clustered postings list before/after an m-way split.

    The list is a long gap of n1, a run of run_len 1-gaps, a long gap of n2,
    and another run of run_len 1-gaps.  after_bits applies the per-node
    average shape (gaps divided by m, runs split m ways); approx_increase is
    the closed-form (m-1)(log2 n1 + log2 n2) - 2m log2 m.
    """

    before_bits: int
    after_bits: int
    exact_increase: int
    approx_increase: float


def clustered_list_split(n1: int, n2: int, run_len: int, m: int) -> ClusteredSplitCosts:
    """Exact and approximated growth of a URL-style clustered list when split.

    Requires the regime n1, n2 >= run_len*m and run_len >= m.  Long gaps are
    divided with floor division when m does not divide them exactly.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (n1 >= run_len * m and n2 >= run_len * m and run_len >= m):
        raise ValueError("need n1, n2 >= run_len*m and run_len >= m")
    before = delta_len(n1) + delta_len(n2) + 2 * run_len * delta_len(1)
    after = m * (delta_len(n1 // m) + delta_len(n2 // m)) + 2 * run_len * delta_len(1)
    approx = (m - 1) * (math.log2(n1) + math.log2(n2)) - 2 * m * math.log2(m)
    return ClusteredSplitCosts(
        before_bits=before,
        after_bits=after,
        exact_increase=after - before,
        approx_increase=approx,
    )


@dataclass(frozen=True)
class UrnTrialSpec:
    balls: int
    urns: int
    epsilon: float
    trials: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.balls >= self.urns >= 1):
            raise ValueError("need balls >= urns >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must be in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class LoadDeviationBound:
    delta: float
    chernoff_valid: bool  # the tail bound only holds for delta < 2e-1


def load_deviation_bound(balls: int, urns: int, epsilon: float) -> LoadDeviationBound:
    """Smallest deviation delta covered by the max-load tail bound.

    delta = sqrt((4*urns/balls) * ln(urns/epsilon)), natural log: the bound
    comes from an exp(-mu*delta^2/4) tail, so base e is forced.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must be in (0, 1)")
    if not (balls >= urns >= 1):
        raise ValueError("need balls >= urns >= 1")
    delta = math.sqrt((4.0 * urns / balls) * math.log(urns / epsilon))
    return LoadDeviationBound(delta=delta, chernoff_valid=delta < CHERNOFF_DELTA_LIMIT)


@dataclass(frozen=True)
class MaxLoadResult:
    spec: UrnTrialSpec
    delta: float
    chernoff_valid: bool
    bound: float              # (balls/urns) * (1 + delta)
    coverage: float           # fraction of trials with max load <= bound
    min_max_load: int
    mean_max_load: float


def simulate_max_load(spec: UrnTrialSpec) -> MaxLoadResult:
    """Toss balls into urns repeatedly; report how often the bound holds.

    Also asserts the floor fact max load >= balls/urns in every trial.
    """
    bound_info = load_deviation_bound(spec.balls, spec.urns, spec.epsilon)
    rng = np.random.default_rng(spec.seed)
    probs = np.full(spec.urns, 1.0 / spec.urns)
    counts = rng.multinomial(spec.balls, probs, size=spec.trials)
    max_loads = counts.max(axis=1)
    mu = spec.balls / spec.urns
    if int(max_loads.min()) < mu:
        raise AssertionError("max urn load fell below the balls/urns mean")
    bound = mu * (1.0 + bound_info.delta)
    coverage = float(np.mean(max_loads <= bound))
    return MaxLoadResult(
        spec=spec,
        delta=bound_info.delta,
        chernoff_valid=bound_info.chernoff_valid,
        bound=bound,
        coverage=coverage,
        min_max_load=int(max_loads.min()),
        mean_max_load=float(max_loads.mean()),
    )
