import numpy as np
import pytest

from shardlab.invindex import ShardIndex, build_shard_indexes
from shardlab.querysim import (
    Query,
    average_surrogates,
    conjunctive_time,
    disjunctive_time,
    load_queries,
)
from shardlab.sharding import distribute_random, distribute_round_robin

from test_invindex import tiny_corpus


def make_index(shard_id, lists, n_docs=100):
    if not lists:
        empty = np.empty(0, dtype=np.int32)
        return ShardIndex(shard_id, 0, empty, empty)
    terms = np.concatenate([[t] * len(ds) for t, ds in lists]).astype(np.int32)
    docids = np.concatenate([ds for _, ds in lists]).astype(np.int32)
    return ShardIndex(shard_id, n_docs, terms, docids)


def lists_of_lengths(term_lengths):
    """Shard with each term's postings 1..length."""
    return [(t, list(range(1, n + 1))) for t, n in term_lengths.items() if n]


@pytest.fixture
def two_shards():
    # Lengths over terms {a=0, b=1}: shard0 (3, 5), shard1 (6, 1).
    shard0 = make_index(0, lists_of_lengths({0: 3, 1: 5}))
    shard1 = make_index(1, lists_of_lengths({0: 6, 1: 1}))
    return [shard0, shard1]


def test_disjunctive_two_shard_example(two_shards):
    q = Query(raw="a b", terms=(0, 1))
    assert disjunctive_time(q, two_shards) == 8  # max(3+5, 6+1)


def test_conjunctive_two_shard_example(two_shards):
    q = Query(raw="a b", terms=(0, 1))
    assert conjunctive_time(q, two_shards) == 3  # max(min(3,5), min(6,1))


def test_absent_term_contributes_zero(two_shards):
    q = Query(raw="a zz", terms=(0, 7))
    assert disjunctive_time(q, two_shards) == 6  # term 7 adds nothing
    assert conjunctive_time(q, two_shards) == 0  # every shard misses term 7


def test_m1_reductions_exact():
    c = tiny_corpus([(0, 1), (0, 2), (0,), (1, 2)])
    (idx,) = build_shard_indexes(c, distribute_round_robin(c, 1), "url", seed=0)
    q = Query(raw="", terms=(0, 1))
    df = {t: int(c.df[t]) for t in q.terms}
    assert disjunctive_time(q, [idx]) == sum(df.values())
    assert conjunctive_time(q, [idx]) == min(df.values())


def test_td_at_least_tc_and_pigeonhole():
    c = tiny_corpus([(0, 1, 2), (0, 2), (1,), (0, 1), (2,), (0,)])
    rng = np.random.default_rng(0)
    for m in (1, 2, 3):
        indexes = build_shard_indexes(c, distribute_random(c, m, seed=4), "rnd", seed=1)
        for _ in range(10):
            terms = tuple(sorted(set(rng.choice(3, size=2))))
            q = Query(raw="", terms=terms)
            td, tc = disjunctive_time(q, indexes), conjunctive_time(q, indexes)
            assert td >= tc
            total = sum(int(c.df[t]) for t in terms)
            assert td >= total / m


def test_load_queries_filters_and_flags(tmp_path):
    from shardlab.corpus import Vocabulary

    vocab = Vocabulary()
    for tok in ("tax", "form"):
        vocab.add(tok)
    path = tmp_path / "queries.txt"
    path.write_text("tax form\nzzzz\ntax tax\n", encoding="utf-8")
    queries = load_queries(path, vocab)
    assert [q.evaluable for q in queries] == [True, False, True]
    assert queries[0].terms == (0, 1)
    assert queries[2].terms == (0,)  # duplicates collapse


def test_load_queries_empty_file_errors(tmp_path):
    path = tmp_path / "queries.txt"
    path.write_text("", encoding="utf-8")
    c = tiny_corpus([(0,)])
    with pytest.raises(ValueError):
        load_queries(path, c.vocab)


def test_average_surrogates(two_shards):
    queries = [Query(raw="a b", terms=(0, 1)), Query(raw="none", terms=()), Query(raw="a", terms=(0,))]
    report = average_surrogates(queries, two_shards, policy_tag="random")
    assert report.queries_evaluated == 2
    assert report.queries_excluded == 1
    assert report.m == 2
    # Query 1: (8, 3); query 2 single term: Td = Tc = max(3, 6) = 6.
    assert report.avg_td == pytest.approx((8 + 6) / 2)
    assert report.avg_tc == pytest.approx((3 + 6) / 2)
    single = average_surrogates([queries[0]], two_shards)
    assert (single.avg_td, single.avg_tc) == (8.0, 3.0)


def test_average_surrogates_requires_evaluable():
    with pytest.raises(ValueError):
        average_surrogates([Query(raw="x", terms=())], [make_index(0, lists_of_lengths({0: 1}))])
