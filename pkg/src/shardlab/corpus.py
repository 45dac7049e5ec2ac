"""Document collections: a simple URL<TAB>body text format plus a synthetic
host-clustered generator that emulates URL locality.

A corpus is immutable once built.  Term ids are dense and assigned in
first-seen order; every document keeps a strictly ascending term-id set
(document identifiers only, no frequencies or positions).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
MAX_TOKEN_LEN = 64

# Plain-token English stopword list.  Apostrophe forms are omitted because the
# tokenizer splits on non-alphanumerics; their fragments (s, t, d, ll, ...) are
# listed instead.
DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been
before being below between both but by d did do does doing down during each
few for from further had has have having he her here hers herself him himself
his how i if in into is it its itself just ll m me more most my myself no nor
not now o of off on once only or other our ours ourselves out over own re s
same she should so some such t than that the their theirs them themselves then
there these they this those through to too under until up ve very was we were
what when where which while who whom why will with y you your yours yourself
yourselves
""".split())


class CorpusFormatError(ValueError):
    """Malformed corpus file; the message names the offending line."""


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens over 64 chars."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) <= MAX_TOKEN_LEN]


def extract_host(url: str) -> str:
    """Substring between the scheme (if any) and the first '/'."""
    rest = url.split("://", 1)[-1]
    host = rest.split("/", 1)[0]
    if not host:
        raise ValueError(f"URL has no host: {url!r}")
    return host


@dataclass(frozen=True)
class Document:
    doc_key: int
    url: str
    host: str
    terms: tuple[int, ...]  # strictly ascending term ids, non-empty


class Vocabulary:
    """token <-> dense term id table, ids assigned in first-seen order."""

    def __init__(self) -> None:
        self.tokens: list[str] = []
        self._ids: dict[str, int] = {}

    def add(self, token: str) -> int:
        tid = self._ids.get(token)
        if tid is None:
            tid = len(self.tokens)
            self._ids[token] = tid
            self.tokens.append(token)
        return tid

    def id_of(self, token: str) -> int | None:
        return self._ids.get(token)

    def token_of(self, tid: int) -> str:
        return self.tokens[tid]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids


@dataclass(frozen=True, eq=False)
class Corpus:
    """Immutable document collection with global term statistics.

    total_postings is N = sum over documents of |terms|, which equals the sum
    of per-term document frequencies.  term_flat/doc_offsets hold the same
    term sets as one flat array (document k owns term_flat[offsets[k]:
    offsets[k+1]]), which index builds gather from.  Safe to share across
    threads.
    """

    documents: tuple[Document, ...]
    vocab: Vocabulary
    df: np.ndarray
    total_postings: int
    term_flat: np.ndarray
    doc_offsets: np.ndarray

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    @property
    def n_terms(self) -> int:
        return len(self.vocab)


def _finalize_corpus(docs: list[Document], vocab: Vocabulary) -> Corpus:
    if not docs:
        raise ValueError("corpus is empty after filtering")
    df = np.zeros(len(vocab), dtype=np.int64)
    lens = np.fromiter((len(d.terms) for d in docs), dtype=np.int64, count=len(docs))
    offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    flat = np.empty(int(offsets[-1]), dtype=np.int32)
    for d, start in zip(docs, offsets[:-1]):
        flat[start:start + len(d.terms)] = d.terms
        df[list(d.terms)] += 1
    return Corpus(documents=tuple(docs), vocab=vocab, df=df,
                  total_postings=int(offsets[-1]), term_flat=flat, doc_offsets=offsets)


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One token per line, lowercased; blank lines ignored."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        token = line.strip().lower()
        if token:
            words.add(token)
    return frozenset(words)


def ingest_corpus(path: str | Path, stopwords: str | Path | None = None) -> Corpus:
    """Load a URL<TAB>body-per-line file.

    Tokens are lowercased, stopwords removed, no stemming; documents left with
    no terms are dropped.  doc_key is the position among retained documents.
    Raises CorpusFormatError naming the line for malformed records and
    ValueError if nothing survives filtering.
    """
    stop = DEFAULT_STOPWORDS if stopwords is None else load_stopwords(stopwords)
    vocab = Vocabulary()
    docs: list[Document] = []
    with open(path, "r", encoding="utf-8-sig") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            url, sep, body = line.partition("\t")
            if not sep or not url:
                raise CorpusFormatError(f"{path}: line {lineno}: expected 'URL<TAB>body text'")
            try:
                host = extract_host(url)
            except ValueError as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: {exc}") from None
            ids = sorted({vocab.add(t) for t in tokenize(body) if t not in stop})
            if not ids:
                continue
            docs.append(Document(doc_key=len(docs), url=url, host=host, terms=tuple(ids)))
    return _finalize_corpus(docs, vocab)


def corpus_stats(c: Corpus) -> tuple[int, int, int]:
    """(document count, distinct terms, total postings N), N cross-checked."""
    n_from_docs = sum(len(d.terms) for d in c.documents)
    n_from_df = int(c.df.sum())
    if not (n_from_docs == n_from_df == c.total_postings):
        raise AssertionError(
            f"posting count mismatch: docs={n_from_docs} df={n_from_df} stored={c.total_postings}"
        )
    return c.n_docs, c.n_terms, c.total_postings


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic host-clustered generator.

    Each document draws terms independently: with probability host_locality
    from its host's Zipf-distributed vocabulary slice, otherwise from the
    shared global Zipf vocabulary.  Host slices are overlapping windows over
    a common host-term space (hosts with nearby indexes share part of their
    vocabulary), giving URL order locality at several scales, the way
    same-sector sites do.  With probability drift a page reuses part of the
    preceding page of the same host, so intra-host page order carries term
    locality too.  URLs are host{h}.gov/p{seq}, which makes lexicographic
    URL order cluster hosts and order pages within hosts.
    """

    n_docs: int = 1000
    n_hosts: int = 10
    vocab_global: int = 20000
    vocab_per_host: int = 50
    doc_len_mean: int = 60
    host_locality: float = 0.7
    zipf_exponent: float = 1.1
    drift: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.n_docs >= self.n_hosts >= 1):
            raise ValueError("need n_docs >= n_hosts >= 1")
        for name in ("host_locality", "drift"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        if self.zipf_exponent <= 0:
            raise ValueError("zipf_exponent must be positive")
        if min(self.vocab_global, self.vocab_per_host, self.doc_len_mean) < 1:
            raise ValueError("vocab sizes and doc_len_mean must be >= 1")


def _zipf_cdf(size: int, exponent: float) -> np.ndarray:
    weights = 1.0 / np.power(np.arange(1, size + 1, dtype=np.float64), exponent)
    return np.cumsum(weights / weights.sum())


def _zipf_draws(rng: np.random.Generator, cdf: np.ndarray, count: int) -> np.ndarray:
    # Clamp: the cdf tail can round to just under 1.0.
    return np.minimum(np.searchsorted(cdf, rng.random(count), side="right"), len(cdf) - 1)


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    """Deterministic synthetic corpus; a pure function of its parameters."""
    rng = np.random.default_rng(spec.seed)
    n, n_hosts = spec.n_docs, spec.n_hosts
    host_of = np.arange(n) % n_hosts
    seq_of = np.arange(n) // n_hosts
    host_width = max(4, len(str(n_hosts - 1)))
    page_width = max(6, len(str((n - 1) // n_hosts)))
    # Host h draws from window [h*stride, h*stride + vocab_per_host) of a
    # shared host-term space, so hosts less than ~4 indexes apart overlap.
    stride = max(1, spec.vocab_per_host // 4)

    lens = np.maximum(rng.poisson(spec.doc_len_mean, size=n), 1)
    total = int(lens.sum())
    drift_u = rng.random(n)
    source_u = rng.random(total)          # host-vs-global decision per fresh slot
    host_pool = _zipf_draws(rng, _zipf_cdf(spec.vocab_per_host, spec.zipf_exponent), total)
    glob_pool = _zipf_draws(rng, _zipf_cdf(spec.vocab_global, spec.zipf_exponent), total)

    # Synthetic term ids: globals are 0..G-1, host-space position p maps to
    # G + p.  Dense ids are assigned on first sight below.
    vocab = Vocabulary()
    dense_of: dict[int, int] = {}
    docs: list[Document] = []
    prev_terms: list[list[int]] = [[] for _ in range(n_hosts)]
    cursor = 0

    for i in range(n):
        h = int(host_of[i])
        length = int(lens[i])
        reuse: list[int] = []
        if seq_of[i] > 0 and drift_u[i] < spec.drift:
            reuse = prev_terms[h][: min(len(prev_terms[h]), length // 2)]
        fresh = length - len(reuse)
        raw = list(reuse)
        for k in range(fresh):
            if source_u[cursor + k] < spec.host_locality:
                raw.append(spec.vocab_global + h * stride + int(host_pool[cursor + k]))
            else:
                raw.append(int(glob_pool[cursor + k]))
        cursor += fresh

        dense: set[int] = set()
        for syn in raw:
            tid = dense_of.get(syn)
            if tid is None:
                if syn < spec.vocab_global:
                    token = f"g{syn:06d}"
                else:
                    token = f"s{syn - spec.vocab_global:06d}"
                tid = vocab.add(token)
                dense_of[syn] = tid
            dense.add(tid)
        terms = tuple(sorted(dense))
        prev_terms[h] = sorted(set(raw))
        url = f"host{h:0{host_width}d}.gov/p{int(seq_of[i]):0{page_width}d}"
        docs.append(Document(doc_key=i, url=url, host=f"host{h:0{host_width}d}.gov", terms=terms))

    return _finalize_corpus(docs, vocab)
