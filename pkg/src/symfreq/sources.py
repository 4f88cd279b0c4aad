"""Symbol streams: file decoders and sequence generators.

Every stream hands out symbols as numpy chunks. A stream can also be cut into
contiguous :class:`Segment` objects that are read independently, which is
what the parallel engine uses. Generators do this by random access: each of
them can produce the symbols at any offset without replaying the prefix.

Pseudorandom source
-------------------
:func:`gen_bernoulli` draws one 64-bit word per symbol from SplitMix64::

    gamma = 0x9E3779B97F4A7C15
    z  = (seed + (k + 1) * gamma) mod 2**64          # k = 0, 1, 2, ...
    z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z  = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    u_k = z ^ (z >> 31)

which is word k of the reference ``splitmix64`` with initial state ``seed``
(taken mod 2**64). Symbol k is the number of thresholds
``T_i = floor(c_i * 2**64)`` with ``T_i <= u_k``, where ``c_i`` is the exact
cumulative probability of symbols 0..i (i < m-1). Each symbol's probability
is off by less than 2**-64, and is exact whenever the target denominators
divide 2**64. Test vectors for seed 0 and seed 42 live in the test suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import DecodeError, InvalidAlphabetError, InvalidMeasureError, InvalidPatternError
from .measure import Alphabet, EmpiricalMeasure, as_symbols

__all__ = [
    "DEFAULT_CHUNK",
    "RAW_BYTE",
    "ASCII_DIGIT",
    "DEFAULT_SKIP",
    "DecoderConfig",
    "Segment",
    "SymbolStream",
    "ArrayStream",
    "FileStream",
    "ChampernowneStream",
    "PeriodicStream",
    "BernoulliStream",
    "from_symbols",
    "decode_file",
    "encode_symbols",
    "gen_champernowne",
    "gen_periodic",
    "gen_bernoulli",
    "splitmix64",
]

DEFAULT_CHUNK = 1 << 20

RAW_BYTE = "raw-byte"
ASCII_DIGIT = "ascii-digit"
DEFAULT_SKIP = frozenset(b" \t\r\n")

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"

_SKIP = -2
_BAD = -1


def _ascii_table(skip: frozenset[int]) -> np.ndarray:
    lut = np.full(256, _BAD, dtype=np.int16)
    for v, ch in enumerate(_DIGITS):
        lut[ord(ch)] = v
        lut[ord(ch.upper())] = v
    for b in skip:
        lut[b] = _SKIP
    return lut


@dataclass(frozen=True)
class DecoderConfig:
    mode: str = ASCII_DIGIT
    skip_set: frozenset[int] = DEFAULT_SKIP

    def __post_init__(self):
        if self.mode not in (RAW_BYTE, ASCII_DIGIT):
            raise ValueError(f"unknown decoder mode {self.mode!r}")
        object.__setattr__(self, "skip_set", frozenset(int(b) for b in self.skip_set))

    def check(self, alphabet: Alphabet):
        if self.mode == RAW_BYTE and alphabet.m > 256:
            raise InvalidAlphabetError(f"raw-byte decoding needs m <= 256, got {alphabet.m}")
        if self.mode == ASCII_DIGIT and alphabet.m > 36:
            raise InvalidAlphabetError(f"ascii-digit decoding needs m <= 36, got {alphabet.m}")


@dataclass(frozen=True)
class Segment:
    """A contiguous piece of a stream, in the stream's native units.

    ``start`` is the absolute symbol offset of the first symbol when it can be
    known without reading earlier segments (None for text files, where
    skipped bytes make it data dependent).
    """

    source: "SymbolStream"
    lo: int
    hi: int
    start: int | None

    def chunks(self, chunk_size: int = DEFAULT_CHUNK) -> Iterator[np.ndarray]:
        return self.source._range_chunks(self.lo, self.hi, chunk_size)


class SymbolStream:
    """A finite or unbounded source of symbols over ``alphabet``.

    Subclasses implement ``_range_chunks(lo, hi, chunk_size)`` over native
    units (symbols, or bytes for text files) and ``_native_end(limit)``.
    Streams are single-consumer; each call to :meth:`chunks` starts over.
    """

    alphabet: Alphabet
    known_length: int | None = None
    #: True when native units are symbols, so segment starts are known upfront.
    symbol_addressed: bool = True

    @property
    def unbounded(self) -> bool:
        return False

    def _range_chunks(self, lo: int, hi: int | None, chunk_size: int) -> Iterator[np.ndarray]:
        raise NotImplementedError

    def _native_end(self, limit: int | None) -> int | None:
        raise NotImplementedError

    def chunks(self, chunk_size: int = DEFAULT_CHUNK, limit: int | None = None) -> Iterator[np.ndarray]:
        """Yield successive symbol arrays, stopping after ``limit`` symbols if given."""
        if chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        it = self._range_chunks(0, self._native_end(limit), chunk_size)
        if limit is None or self.symbol_addressed:
            yield from it
            return
        left = limit
        for chunk in it:
            if left <= 0:
                return
            if chunk.size > left:
                chunk = chunk[:left]
            left -= chunk.size
            yield chunk

    def __iter__(self) -> Iterator[int]:
        for chunk in self.chunks():
            yield from chunk.tolist()

    def take(self, n: int) -> np.ndarray:
        """The first ``n`` symbols (fewer if a finite stream runs out)."""
        parts = list(self.chunks(limit=n))
        if not parts:
            return np.zeros(0, dtype=self.alphabet.dtype)
        return np.concatenate(parts)

    def segments(self, parts: int, limit: int | None = None) -> list[Segment]:
        """Split the first ``limit`` symbols (whole stream if None) into contiguous pieces."""
        end = self._native_end(limit)
        if end is None:
            raise ValueError("an unbounded stream needs a limit to be segmented")
        parts = max(1, min(parts, end)) if end else 1
        bounds = [end * k // parts for k in range(parts + 1)]
        return [
            Segment(self, lo, hi, lo if self.symbol_addressed else None)
            for lo, hi in zip(bounds, bounds[1:])
        ]


class ArrayStream(SymbolStream):
    """A finite in-memory string."""

    def __init__(self, symbols, alphabet: Alphabet):
        self.alphabet = alphabet
        self.symbols = as_symbols(symbols, alphabet)
        self.known_length = int(self.symbols.size)

    def _native_end(self, limit):
        return self.known_length if limit is None else min(limit, self.known_length)

    def _range_chunks(self, lo, hi, chunk_size):
        for pos in range(lo, hi, chunk_size):
            yield self.symbols[pos : min(pos + chunk_size, hi)]


def from_symbols(symbols, alphabet: Alphabet) -> ArrayStream:
    return ArrayStream(symbols, alphabet)


class FileStream(SymbolStream):
    """Symbols decoded from a file, either one per byte or as text digits."""

    def __init__(self, path, alphabet: Alphabet, config: DecoderConfig):
        config.check(alphabet)
        self.path = os.fspath(path)
        self.alphabet = alphabet
        self.config = config
        with open(self.path, "rb"):
            pass
        self.size = os.path.getsize(self.path)
        if config.mode == RAW_BYTE:
            self.known_length = self.size
            self.symbol_addressed = True
            self._lut = None
        else:
            self.known_length = None
            self.symbol_addressed = False
            self._lut = _ascii_table(config.skip_set)

    def _native_end(self, limit):
        if self.symbol_addressed and limit is not None:
            return min(limit, self.size)
        return self.size

    def _range_chunks(self, lo, hi, chunk_size):
        buf = bytearray(chunk_size)
        with open(self.path, "rb") as fh:
            fh.seek(lo)
            pos = lo
            while pos < hi:
                want = min(chunk_size, hi - pos)
                got = fh.readinto(memoryview(buf)[:want])
                if not got:
                    return
                raw = np.frombuffer(buf, dtype=np.uint8, count=got).copy()
                yield self._decode(raw, pos)
                pos += got

    def _decode(self, raw: np.ndarray, offset: int) -> np.ndarray:
        m = self.alphabet.m
        if self._lut is None:
            if m < 256:
                bad = raw >= m
                if bad.any():
                    i = int(np.argmax(bad))
                    raise DecodeError(offset + i, int(raw[i]), f"is symbol {raw[i]} >= m={m}", raw[:i])
            return raw
        vals = self._lut[raw]
        bad = (vals == _BAD) | (vals >= m)
        if bad.any():
            i = int(np.argmax(bad))
            b = int(raw[i])
            head = vals[:i]
            partial = head[head >= 0].astype(self.alphabet.dtype)
            if vals[i] == _BAD:
                raise DecodeError(offset + i, b, "is not a digit", partial)
            raise DecodeError(offset + i, b, f"is digit {int(vals[i])} >= m={m}", partial)
        return vals[vals >= 0].astype(self.alphabet.dtype)


def decode_file(path, alphabet: Alphabet, config: DecoderConfig | None = None) -> FileStream:
    return FileStream(path, alphabet, config or DecoderConfig())


def encode_symbols(symbols, alphabet: Alphabet, mode: str = ASCII_DIGIT) -> bytes:
    """Inverse of the decoders: one byte per symbol, raw or as a lowercase digit."""
    DecoderConfig(mode).check(alphabet)
    arr = as_symbols(symbols, alphabet)
    if mode == RAW_BYTE:
        return arr.astype(np.uint8).tobytes()
    table = np.frombuffer(_DIGITS.encode(), dtype=np.uint8)
    return table[arr].tobytes()


class _Generator(SymbolStream):
    """Unbounded stream with random access through ``_generate(offset, count)``."""

    offset: int = 0

    @property
    def unbounded(self) -> bool:
        return True

    def _generate(self, offset: int, count: int) -> np.ndarray:
        raise NotImplementedError

    def _native_end(self, limit):
        return limit

    def _range_chunks(self, lo, hi, chunk_size):
        pos = lo
        while hi is None or pos < hi:
            count = chunk_size if hi is None else min(chunk_size, hi - pos)
            yield self._generate(self.offset + pos, count)
            pos += count

    def fork(self, offset: int):
        """The same sequence, starting ``offset`` symbols further along."""
        if offset < 0:
            raise ValueError("offset must be >= 0")
        return replace(self, offset=self.offset + offset)


def _champernowne_blocks(m: int):
    """(digit length d, first integer with d digits, first position) for d = 1, 2, ..."""
    d, first, pos = 1, 1, 0
    while True:
        yield d, first, pos
        pos += d * (m - 1) * first
        first *= m
        d += 1


@dataclass(frozen=True)
class ChampernowneStream(_Generator):
    """Base-m representations of 1, 2, 3, ... written one after another."""

    alphabet: Alphabet
    offset: int = 0

    def _locate(self, pos: int) -> tuple[int, int, int]:
        """Digit length, integer, and digit index holding position ``pos``."""
        m = self.alphabet.m
        for d, first, start in _champernowne_blocks(m):
            size = d * (m - 1) * first
            if pos < start + size:
                q, r = divmod(pos - start, d)
                return d, first + q, r

    def _generate(self, offset, count):
        m = self.alphabet.m
        out = np.empty(count, dtype=self.alphabet.dtype)
        filled = 0
        d, num, skip = self._locate(offset)
        while filled < count:
            block_end = m**d  # first integer with d+1 digits
            need = count - filled + skip
            k = min(-(-need // d), block_end - num)
            nums = np.arange(num, num + k, dtype=object if block_end > 2**62 else np.int64)
            powers = np.array([m**e for e in range(d - 1, -1, -1)], dtype=nums.dtype)
            digits = ((nums[:, None] // powers) % m).reshape(-1)[skip:]
            take = min(digits.size, count - filled)
            out[filled : filled + take] = digits[:take]
            filled += take
            num += k
            skip = 0
            if num == block_end:
                d += 1
        return out


def gen_champernowne(alphabet: Alphabet) -> ChampernowneStream:
    return ChampernowneStream(alphabet)


@dataclass(frozen=True)
class PeriodicStream(_Generator):
    alphabet: Alphabet
    pattern: tuple[int, ...]
    offset: int = 0
    _array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.pattern) == 0:
            raise InvalidPatternError("periodic pattern must be nonempty")
        arr = as_symbols(list(self.pattern), self.alphabet)
        object.__setattr__(self, "pattern", tuple(int(x) for x in arr))
        object.__setattr__(self, "_array", arr)

    def _generate(self, offset, count):
        rolled = np.roll(self._array, -(offset % self._array.size))
        return np.resize(rolled, count)


def gen_periodic(pattern: Sequence[int], alphabet: Alphabet) -> PeriodicStream:
    return PeriodicStream(alphabet, tuple(pattern))


_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def splitmix64(seed: int, offset: int, count: int) -> np.ndarray:
    """Words ``offset .. offset+count-1`` of SplitMix64 started from ``seed``."""
    k = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + k * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MUL1
        z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def _thresholds(target: EmpiricalMeasure) -> np.ndarray:
    cum = 0
    out = []
    for num in target.numerators[:-1]:
        cum += num
        t = (cum << 64) // target.denominator
        if t > _MASK:
            break  # cumulative mass already 1: later symbols are never drawn
        out.append(t)
    return np.array(out, dtype=np.uint64)


@dataclass(frozen=True)
class BernoulliStream(_Generator):
    """i.i.d. symbols distributed as ``target`` (SplitMix64, see module docs)."""

    target: EmpiricalMeasure
    seed: int
    offset: int = 0
    _thresholds: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK)
        object.__setattr__(self, "_thresholds", _thresholds(self.target))

    @property
    def alphabet(self) -> Alphabet:
        return self.target.alphabet

    def _generate(self, offset, count):
        u = splitmix64(self.seed, offset, count)
        idx = np.searchsorted(self._thresholds, u, side="right")
        return idx.astype(self.alphabet.dtype)


def gen_bernoulli(target, seed: int) -> BernoulliStream:
    """``target`` is an :class:`EmpiricalMeasure` or a sequence of rationals summing to 1."""
    if not isinstance(target, EmpiricalMeasure):
        try:
            values = [Fraction(v) for v in target]
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InvalidMeasureError(f"bad target component: {exc}") from None
        if len(values) < 2:
            raise InvalidMeasureError("target needs at least 2 components")
        target = EmpiricalMeasure.from_fractions(Alphabet(len(values)), values)
    return BernoulliStream(target, seed)
