"""Size accounting for a partitioned index.

P_i sums the encoded bits of every postings list on shard i; P = sum of P_i.
The dictionary overhead charges each of the |T_i| terms on shard i one
pointer of log2(P_i) bits (real-valued; lists may start on arbitrary bit
boundaries).  Bits per posting comes in two flavors: P/N and (P+OH)/N.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codecs import CodecSpec, delta_len_array, pfordelta_size
from .invindex import ShardIndex

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SizeReport:
    per_shard_bits: tuple[int, ...]
    total_bits: int
    overhead_bits: float
    postings: int
    bpp: float
    bpp_oh: float


def shard_postings_bits(idx: ShardIndex, spec: CodecSpec) -> int:
    """P_i: encoded bits of all postings lists on one shard (0 if empty)."""
    vals, starts = idx.first_and_gaps()
    if vals.size == 0:
        return 0
    if spec.kind == "delta":
        return int(delta_len_array(vals).sum())
    lengths = np.diff(starts)
    total = 0
    # Runs shorter than the packing minimum are plain per-value delta; they
    # can be summed in one vectorized pass.  Longer runs pack blockwise.
    short = np.repeat(lengths < spec.pfor_min_block, lengths)
    if short.any():
        total += int(delta_len_array(vals[short]).sum())
    for i in np.flatnonzero(lengths >= spec.pfor_min_block):
        total += pfordelta_size(vals[starts[i]:starts[i + 1]], spec)
    return total


def overhead_bits(indexes: Sequence[ShardIndex], spec: CodecSpec, per_shard_bits: Sequence[int] | None = None) -> float:
    """OH: sum over shards of |T_i| * log2(P_i), clamped at zero.

    Shards with empty dictionaries contribute nothing.  A nonempty shard
    with P_i < 2 would go nonpositive; it is clamped to zero with a warning
    (only reachable for degenerate single-posting shards).
    """
    if per_shard_bits is None:
        per_shard_bits = [shard_postings_bits(idx, spec) for idx in indexes]
    total = 0.0
    for idx, bits in zip(indexes, per_shard_bits):
        if idx.n_terms == 0:
            continue
        if bits < 2:
            log.warning("shard %d has %d terms but only %d postings bits; overhead clamped to 0",
                        idx.shard_id, idx.n_terms, bits)
            continue
        total += idx.n_terms * math.log2(bits)
    return total


def bits_per_posting(indexes: Sequence[ShardIndex], spec: CodecSpec) -> SizeReport:
    """Full size report for a partitioned index; errors if N = 0."""
    per_shard = tuple(shard_postings_bits(idx, spec) for idx in indexes)
    postings = sum(idx.n_postings for idx in indexes)
    if postings == 0:
        raise ValueError("bits per posting is undefined for an empty index (N = 0)")
    total = sum(per_shard)
    oh = overhead_bits(indexes, spec, per_shard)
    return SizeReport(
        per_shard_bits=per_shard,
        total_bits=total,
        overhead_bits=oh,
        postings=postings,
        bpp=total / postings,
        bpp_oh=(total + oh) / postings,
    )
