"""Bit-exact gap codecs over positive-integer sequences.

Two codecs are provided for postings lists stored as (first docId, dGaps...):

* ``delta`` -- Elias delta, one codeword per integer.  The codeword for k
  occupies ``1 + floor(log2 k) + 2*floor(log2(1 + floor(log2 k)))`` bits,
  which :func:`delta_len` computes exactly.

* ``pfd`` -- a blockwise packed codec.  The sequence is cut into consecutive
  blocks of ``pfor_block`` values; a trailing block of at least
  ``pfor_min_block`` values is packed the same way, and a shorter trailing
  block falls back to per-value Elias delta.  A packed block of L values is
  laid out as:

      16-bit header  = 6-bit width b | 10-bit exception count
      L*b bits       = (value-1) truncated to b bits, in order
      exceptions     = gamma-coded 1-based position gaps, then
                       delta-coded overflow parts ((value-1) >> b, plus 1)

  b is the smallest width in 0..32 such that at least ceil(threshold*L)
  values satisfy value-1 < 2**b.

All sizes are exact integer bit counts; encoders realize exactly the sizes
the accounting functions report.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .invindex import PostingsList

PFOR_BLOCK = 128
PFOR_MIN_BLOCK = 64
PFOR_THRESHOLD = 0.90
_MAX_WIDTH = 32

CODEC_NAMES = ("delta", "pfd")


class CodecError(ValueError):
    """Raised on invalid codec input or a corrupt encoded stream."""


@dataclass(frozen=True)
class CodecSpec:
    """Codec selection plus the fixed block parameters of the pfd codec."""

    kind: str = "delta"
    pfor_block: int = PFOR_BLOCK
    pfor_threshold: float = PFOR_THRESHOLD
    pfor_min_block: int = PFOR_MIN_BLOCK

    def __post_init__(self) -> None:
        if self.kind not in CODEC_NAMES:
            raise CodecError(f"unknown codec kind {self.kind!r}; expected one of {CODEC_NAMES}")
        if not (0 < self.pfor_threshold <= 1.0):
            raise CodecError("pfor_threshold must be in (0, 1]")
        if not (1 <= self.pfor_min_block <= self.pfor_block):
            raise CodecError("need 1 <= pfor_min_block <= pfor_block")

    @staticmethod
    def from_name(name: str) -> "CodecSpec":
        alias = {"pfordelta": "pfd"}
        return CodecSpec(kind=alias.get(name, name))


@dataclass(frozen=True)
class BitSequence:
    """An immutable bit string: packed bytes plus the exact bit length."""

    data: bytes
    length: int

    def __post_init__(self) -> None:
        if len(self.data) != (self.length + 7) // 8:
            raise CodecError("BitSequence byte payload does not match its bit length")

    def __len__(self) -> int:
        return self.length


class BitWriter:
    """Accumulates big-endian bit fields into a byte buffer."""

    def __init__(self) -> None:
        self._buf = bytearray()
        self._acc = 0
        self._nacc = 0
        self._length = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits == 0:
            return
        if value < 0 or value >> nbits:
            raise CodecError(f"value {value} does not fit in {nbits} bits")
        self._acc = (self._acc << nbits) | value
        self._nacc += nbits
        self._length += nbits
        while self._nacc >= 8:
            self._nacc -= 8
            self._buf.append((self._acc >> self._nacc) & 0xFF)
        self._acc &= (1 << self._nacc) - 1

    def __len__(self) -> int:
        return self._length

    def to_bitsequence(self) -> BitSequence:
        data = bytes(self._buf)
        if self._nacc:
            data += bytes([(self._acc << (8 - self._nacc)) & 0xFF])
        return BitSequence(data=data, length=self._length)


class BitReader:
    """Reads back bit fields written by :class:`BitWriter`."""

    def __init__(self, bits: BitSequence) -> None:
        self._data = bits.data
        self._length = bits.length
        self._pos = 0

    def read(self, nbits: int) -> int:
        if nbits == 0:
            return 0
        if self._pos + nbits > self._length:
            raise CodecError("bit stream exhausted (corrupt or truncated input)")
        out = 0
        pos = self._pos
        remaining = nbits
        while remaining:
            byte = self._data[pos >> 3]
            offset = pos & 7
            take = min(8 - offset, remaining)
            chunk = (byte >> (8 - offset - take)) & ((1 << take) - 1)
            out = (out << take) | chunk
            pos += take
            remaining -= take
        self._pos = pos
        return out

    def read_unary(self) -> int:
        """Number of 0 bits before the next 1 bit (the 1 is consumed)."""
        count = 0
        while True:
            if self.read(1):
                return count
            count += 1

    @property
    def remaining(self) -> int:
        return self._length - self._pos


def delta_len(k: int) -> int:
    """Exact bit length of the Elias delta codeword for k >= 1."""
    if k < 1:
        raise CodecError(f"delta_len requires k >= 1, got {k}")
    fl = k.bit_length() - 1
    return 1 + fl + 2 * ((fl + 1).bit_length() - 1)


def _floor_log2_exact(a: np.ndarray) -> np.ndarray:
    # frexp is exact for integers below 2**53: k in [2**e, 2**(e+1)) -> exp e+1.
    _, e = np.frexp(a.astype(np.float64))
    return (e - 1).astype(np.int64)


def delta_len_array(values: np.ndarray) -> np.ndarray:
    """Vectorized :func:`delta_len` over an array of integers >= 1."""
    a = np.asarray(values)
    if a.size and int(a.min()) < 1:
        raise CodecError("delta_len_array requires all values >= 1")
    fl = _floor_log2_exact(a)
    return 1 + fl + 2 * _floor_log2_exact(fl + 1)


def _gamma_len(k: int) -> int:
    return 2 * (k.bit_length() - 1) + 1


def _write_gamma(w: BitWriter, k: int) -> None:
    fl = k.bit_length() - 1
    w.write(1, fl + 1)            # fl zeros then a 1
    w.write(k - (1 << fl), fl)


def _read_gamma(r: BitReader) -> int:
    fl = r.read_unary()
    return (1 << fl) | r.read(fl)


def _write_delta(w: BitWriter, k: int) -> None:
    fl = k.bit_length() - 1
    _write_gamma(w, fl + 1)
    w.write(k - (1 << fl), fl)


def _read_delta(r: BitReader) -> int:
    fl = _read_gamma(r) - 1
    return (1 << fl) | r.read(fl)


def delta_encode(seq: Iterable[int]) -> BitSequence:
    """Elias-delta encode positive integers; |result| == sum of delta_len."""
    w = BitWriter()
    for v in seq:
        if v < 1:
            raise CodecError(f"delta_encode requires values >= 1, got {v}")
        _write_delta(w, v)
    return w.to_bitsequence()


def delta_decode(bits: BitSequence, count: int) -> list[int]:
    r = BitReader(bits)
    return [_read_delta(r) for _ in range(count)]


def _threshold_count(length: int, threshold: float) -> int:
    # Exact ceil(threshold * length); float ceil would misfire on e.g. 0.9*60.
    frac = Fraction(threshold).limit_denominator(10**6) * length
    return -(-frac.numerator // frac.denominator)


def _pfd_width(vals0: np.ndarray, threshold: float) -> int:
    """Smallest b in 0..32 covering at least ceil(threshold*L) of value-1."""
    need = _threshold_count(len(vals0), threshold)
    widths = np.zeros(len(vals0), dtype=np.int64)
    nz = vals0 > 0
    widths[nz] = _floor_log2_exact(vals0[nz]) + 1
    widths.sort()
    b = int(widths[need - 1])
    return min(b, _MAX_WIDTH)


def _pfd_block_exceptions(vals0: np.ndarray, b: int) -> np.ndarray:
    return np.flatnonzero(vals0 >> b)


def _pfd_block_size(vals0: np.ndarray, threshold: float) -> int:
    b = _pfd_width(vals0, threshold)
    exc = _pfd_block_exceptions(vals0, b)
    bits = 16 + b * len(vals0)
    if len(exc):
        positions = exc + 1
        gaps = np.diff(positions, prepend=0)
        bits += sum(_gamma_len(int(g)) for g in gaps)
        bits += int(delta_len_array((vals0[exc] >> b) + 1).sum())
    return bits


def _pfd_blocks(n: int, spec: CodecSpec) -> list[tuple[int, int, bool]]:
    """(start, end, packed?) block boundaries for a sequence of length n."""
    out = []
    pos = 0
    while n - pos >= spec.pfor_block:
        out.append((pos, pos + spec.pfor_block, True))
        pos += spec.pfor_block
    if n - pos:
        out.append((pos, n, (n - pos) >= spec.pfor_min_block))
    return out


def pfordelta_size(seq: Sequence[int] | np.ndarray, spec: CodecSpec | None = None) -> int:
    """Exact encoded bit count of the pfd codec, without materializing bits."""
    spec = spec or CodecSpec(kind="pfd")
    a = np.asarray(seq, dtype=np.int64)
    if a.size and int(a.min()) < 1:
        raise CodecError("pfordelta_size requires values >= 1")
    total = 0
    for start, end, packed in _pfd_blocks(len(a), spec):
        if packed:
            total += _pfd_block_size(a[start:end] - 1, spec.pfor_threshold)
        else:
            total += int(delta_len_array(a[start:end]).sum())
    return total


def pfordelta_encode(seq: Sequence[int] | np.ndarray, spec: CodecSpec | None = None) -> BitSequence:
    spec = spec or CodecSpec(kind="pfd")
    a = np.asarray(seq, dtype=np.int64)
    if a.size and int(a.min()) < 1:
        raise CodecError("pfordelta_encode requires values >= 1")
    w = BitWriter()
    for start, end, packed in _pfd_blocks(len(a), spec):
        block = a[start:end]
        if not packed:
            for v in block:
                _write_delta(w, int(v))
            continue
        vals0 = block - 1
        b = _pfd_width(vals0, spec.pfor_threshold)
        exc = _pfd_block_exceptions(vals0, b)
        w.write(b, 6)
        w.write(len(exc), 10)
        mask = (1 << b) - 1
        for v0 in vals0:
            w.write(int(v0) & mask, b)
        prev = 0
        for pos in exc:
            _write_gamma(w, int(pos) + 1 - prev)
            prev = int(pos) + 1
        for v0 in vals0[exc]:
            _write_delta(w, (int(v0) >> b) + 1)
    return w.to_bitsequence()


def pfordelta_decode(bits: BitSequence, count: int, spec: CodecSpec | None = None) -> list[int]:
    spec = spec or CodecSpec(kind="pfd")
    r = BitReader(bits)
    out: list[int] = []
    for start, end, packed in _pfd_blocks(count, spec):
        length = end - start
        if not packed:
            out.extend(_read_delta(r) for _ in range(length))
            continue
        b = r.read(6)
        n_exc = r.read(10)
        if n_exc > length:
            raise CodecError("corrupt pfd block: exception count exceeds block length")
        low = [r.read(b) for _ in range(length)]
        positions = []
        pos = 0
        for _ in range(n_exc):
            pos += _read_gamma(r)
            positions.append(pos - 1)
        for p in positions:
            if p >= length:
                raise CodecError("corrupt pfd block: exception position out of range")
            overflow = _read_delta(r) - 1
            low[p] |= overflow << b
        out.extend(v + 1 for v in low)
    return out


def encoded_size(seq: Sequence[int] | np.ndarray, spec: CodecSpec) -> int:
    """Bit count of the given sequence under spec's codec."""
    if spec.kind == "delta":
        a = np.asarray(seq, dtype=np.int64)
        if a.size == 0:
            return 0
        return int(delta_len_array(a).sum())
    return pfordelta_size(seq, spec)


def postings_size(pl: "PostingsList", spec: CodecSpec) -> int:
    """Encoded bit count of a postings list stored as (first docId, dGaps)."""
    docids = np.asarray(pl.docids, dtype=np.int64)
    vals = np.diff(docids, prepend=0)
    return encoded_size(vals, spec)
