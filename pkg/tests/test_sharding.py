import math

import numpy as np
import pytest

from shardlab.corpus import SyntheticSpec, generate_synthetic
from shardlab.ordering import Ordering, order_url
from shardlab.sharding import (
    distribute_ih_url_slice,
    distribute_random,
    distribute_round_robin,
    distribute_url_slice,
    make_assignment,
    slice_m,
)


@pytest.fixture(scope="module")
def corpus():
    return generate_synthetic(SyntheticSpec(n_docs=120, n_hosts=8, seed=2))


def test_random_single_shard_and_determinism(corpus):
    a = distribute_random(corpus, 1, seed=0)
    assert (a.assign == 0).all()
    b1 = distribute_random(corpus, 7, seed=5)
    b2 = distribute_random(corpus, 7, seed=5)
    assert (b1.assign == b2.assign).all()
    assert (b1.assign != distribute_random(corpus, 7, seed=6).assign).any()
    with pytest.raises(ValueError):
        distribute_random(corpus, 0, seed=1)


def test_random_balance_within_binomial_bounds():
    c = generate_synthetic(SyntheticSpec(n_docs=100_000, n_hosts=100, vocab_global=50,
                                         vocab_per_host=5, doc_len_mean=1, seed=3))
    m = 10
    a = distribute_random(c, m, seed=9)
    sizes = a.shard_sizes()
    expected = c.n_docs / m
    sigma = math.sqrt(c.n_docs * (1 / m) * (1 - 1 / m))
    assert (np.abs(sizes - expected) < 5 * sigma).all()


def test_round_robin_patterns(corpus):
    assert list(distribute_round_robin(corpus, 2).assign[:5]) == [0, 1, 0, 1, 0]
    assert (distribute_round_robin(corpus, 1).assign == 0).all()
    full = distribute_round_robin(corpus, corpus.n_docs)
    assert (full.shard_sizes() == 1).all()


def test_url_slice_rank_rule():
    c = generate_synthetic(SyntheticSpec(n_docs=6, n_hosts=3, seed=4))
    a = distribute_url_slice(c, 3)
    ranked = order_url(c.documents).doc_keys
    for rank, key in enumerate(ranked):
        assert a.shard_of(int(key)) == rank * 3 // 6
    assert sorted(a.shard_sizes()) == [2, 2, 2]


def test_url_slice_uneven_sizes():
    c = generate_synthetic(SyntheticSpec(n_docs=7, n_hosts=3, seed=4))
    sizes = sorted(distribute_url_slice(c, 3).shard_sizes(), reverse=True)
    assert sizes == [3, 2, 2]


def test_ih_url_slice_balanced_and_deterministic(corpus):
    a1 = distribute_ih_url_slice(corpus, 5, seed=3)
    a2 = distribute_ih_url_slice(corpus, 5, seed=3)
    assert (a1.assign == a2.assign).all()
    assert int(a1.shard_sizes().max()) - int(a1.shard_sizes().min()) <= 1
    assert (distribute_ih_url_slice(corpus, 1, seed=3).assign == 0).all()


def test_slice_m_definition():
    ordering = Ordering(doc_keys=np.arange(6), scheme="url")
    a = slice_m(ordering, 3)
    assert [a.shard_of(k) for k in range(6)] == [0, 0, 1, 1, 2, 2]
    assert (slice_m(ordering, 1).assign == 0).all()
    singles = slice_m(ordering, 6)
    assert (singles.shard_sizes() == 1).all()


def test_slice_m_composed_with_url_equals_url_slice(corpus):
    ordering = order_url(corpus.documents)
    for m in (1, 2, 5, 7):
        assert (slice_m(ordering, m).assign == distribute_url_slice(corpus, m).assign).all()


def test_ih_url_slice_equals_slicing_the_ih_url_ordering(corpus):
    from shardlab.ordering import order_ih_url

    ordering = order_ih_url(corpus.documents, seed=21)
    for m in (2, 4, 9):
        expected = slice_m(ordering, m).assign
        assert (distribute_ih_url_slice(corpus, m, seed=21).assign == expected).all()


@pytest.mark.parametrize("policy,needs_seed", [("random", True), ("round-robin", False),
                                               ("url-slice", False), ("ih-url-slice", True)])
def test_every_policy_covers_corpus(corpus, policy, needs_seed):
    for m in (1, 3, 11):
        a = make_assignment(policy, corpus, m, seed=1)
        assert a.assign.shape == (corpus.n_docs,)
        assert int(a.shard_sizes().sum()) == corpus.n_docs
        assert 0 <= int(a.assign.min()) and int(a.assign.max()) < m


def test_make_assignment_rejects_unknown_policy(corpus):
    with pytest.raises(ValueError):
        make_assignment("hash-url", corpus, 2, seed=0)


def test_assignment_csv_export(tmp_path, corpus):
    a = distribute_round_robin(corpus, 2)
    path = tmp_path / "assign.csv"
    a.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "doc_key,shard"
    assert lines[1] == "0,0" and lines[2] == "1,1"
