"""Alphabets, symbol counts and exact empirical measures.

Frequencies are kept as exact rationals throughout. An :class:`EmpiricalMeasure`
stores one shared denominator and a numerator per symbol, so the simplex
condition (components sum to one) is an integer identity, not a tolerance.
Floats only show up in :func:`measure_entropy`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CountOverflowError,
    IncompatibleMeasureError,
    InvalidAlphabetError,
    InvalidMeasureError,
    InvalidSymbolError,
    PrefixOutOfRangeError,
    UndefinedFrequencyError,
)

__all__ = [
    "U64_MAX",
    "TOTAL_VARIATION",
    "SUP_DEVIATION",
    "Alphabet",
    "CountVector",
    "EmpiricalMeasure",
    "alphabet_new",
    "as_symbols",
    "bincount",
    "count_prefix",
    "prefix_count_table",
    "symbol_frequency",
    "empirical_measure",
    "measure_uniform",
    "measure_distance",
    "measure_entropy",
]

U64_MAX = 2**64 - 1

TOTAL_VARIATION = "total-variation"
SUP_DEVIATION = "sup-deviation"


@dataclass(frozen=True)
class Alphabet:
    """The symbol set {0, ..., m-1}."""

    m: int

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)):
            raise InvalidAlphabetError(f"alphabet size must be an integer, got {self.m!r}")
        if self.m < 2:
            raise InvalidAlphabetError(f"alphabet size must be >= 2, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    def __len__(self) -> int:
        return self.m

    def __iter__(self):
        return iter(range(self.m))

    def __contains__(self, value) -> bool:
        return isinstance(value, (int, np.integer)) and 0 <= value < self.m

    @property
    def dtype(self) -> np.dtype:
        """Smallest unsigned dtype able to hold every symbol."""
        if self.m <= 1 << 8:
            return np.dtype(np.uint8)
        if self.m <= 1 << 16:
            return np.dtype(np.uint16)
        if self.m <= 1 << 32:
            return np.dtype(np.uint32)
        return np.dtype(np.uint64)

    def check_symbol(self, value: int) -> int:
        if value not in self:
            raise InvalidSymbolError(0, value, self.m)
        return int(value)


def alphabet_new(m: int) -> Alphabet:
    return Alphabet(m)


def as_symbols(values, alphabet: Alphabet, base_offset: int = 0) -> np.ndarray:
    """Validate ``values`` against ``alphabet`` and return them as a compact array.

    This is the ingestion boundary: counting code downstream assumes valid
    symbols and does no further range checks. ``base_offset`` is added to the
    position reported in :class:`InvalidSymbolError`.
    """
    if isinstance(values, np.ndarray) and values.dtype == alphabet.dtype:
        arr = values.reshape(-1)
        if arr.size and alphabet.m < (1 << (8 * arr.dtype.itemsize)):
            bad = arr >= alphabet.m
            if bad.any():
                pos = int(np.argmax(bad))
                raise InvalidSymbolError(base_offset + pos, int(arr[pos]), alphabet.m)
        return arr
    if isinstance(values, (bytes, bytearray, memoryview)):
        values = np.frombuffer(values, dtype=np.uint8)
    arr = np.asarray(values)
    if arr.size == 0:
        return np.zeros(0, dtype=alphabet.dtype)
    arr = arr.reshape(-1)
    if arr.dtype.kind not in "iu":
        # floats, objects: only accept exact integers
        for pos, v in enumerate(arr.tolist()):
            if not (isinstance(v, int) and not isinstance(v, bool)) or not 0 <= v < alphabet.m:
                raise InvalidSymbolError(base_offset + pos, v, alphabet.m)
        return np.asarray(arr.tolist(), dtype=alphabet.dtype)
    bad = arr >= alphabet.m
    if arr.dtype.kind == "i":
        bad |= arr < 0
    if bad.any():
        pos = int(np.argmax(bad))
        raise InvalidSymbolError(base_offset + pos, int(arr[pos]), alphabet.m)
    return arr.astype(alphabet.dtype, copy=False)


def bincount(symbols: np.ndarray, m: int) -> np.ndarray:
    """Per-symbol occurrence counts of an already validated array (int64)."""
    if symbols.dtype == np.uint64:
        symbols = symbols.astype(np.int64)
    return np.bincount(symbols, minlength=m).astype(np.int64, copy=False)


@dataclass(frozen=True)
class CountVector:
    """Occurrence counts of each symbol over a prefix of length ``n``."""

    alphabet: Alphabet
    counts: tuple[int, ...]
    n: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", int(self.n))
        if len(counts) != self.alphabet.m:
            raise ValueError(f"expected {self.alphabet.m} counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")
        if sum(counts) != self.n:
            raise ValueError(f"counts sum to {sum(counts)}, not n={self.n}")
        if self.n > U64_MAX:
            raise CountOverflowError(f"prefix length {self.n} exceeds 2**64-1")

    @classmethod
    def zeros(cls, alphabet: Alphabet) -> CountVector:
        return cls(alphabet, (0,) * alphabet.m, 0)

    @classmethod
    def from_array(cls, alphabet: Alphabet, counts: np.ndarray) -> CountVector:
        counts = [int(c) for c in counts]
        return cls(alphabet, counts, sum(counts))

    def __getitem__(self, i: int) -> int:
        return self.counts[i]

    def __len__(self) -> int:
        return len(self.counts)

    def __add__(self, other: CountVector) -> CountVector:
        if not isinstance(other, CountVector):
            return NotImplemented
        if other.alphabet != self.alphabet:
            raise IncompatibleMeasureError(
                f"cannot add counts over m={self.alphabet.m} and m={other.alphabet.m}"
            )
        return CountVector(
            self.alphabet,
            tuple(a + b for a, b in zip(self.counts, other.counts)),
            self.n + other.n,
        )


def _lcm(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """A point of the probability simplex over ``alphabet``, stored exactly.

    Component i is ``numerators[i] / denominator``. Equality and hashing are by
    value, so (2/4, 2/4) equals (1/2, 1/2).
    """

    alphabet: Alphabet
    numerators: tuple[int, ...]
    denominator: int

    def __post_init__(self):
        nums = tuple(int(x) for x in self.numerators)
        object.__setattr__(self, "numerators", nums)
        object.__setattr__(self, "denominator", int(self.denominator))
        if len(nums) != self.alphabet.m:
            raise InvalidMeasureError(f"expected {self.alphabet.m} components, got {len(nums)}")
        if self.denominator <= 0:
            raise InvalidMeasureError("denominator must be positive")
        if any(x < 0 for x in nums):
            raise InvalidMeasureError("measure components must be nonnegative")
        if sum(nums) != self.denominator:
            raise InvalidMeasureError(
                f"components sum to {Fraction(sum(nums), self.denominator)}, not 1"
            )

    @classmethod
    def from_fractions(cls, alphabet: Alphabet, values: Sequence) -> EmpiricalMeasure:
        """Build a measure from arbitrary rationals (ints, Fractions, "p/q" strings)."""
        try:
            fracs = [Fraction(v) for v in values]
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InvalidMeasureError(f"bad measure component: {exc}") from None
        if len(fracs) != alphabet.m:
            raise InvalidMeasureError(f"expected {alphabet.m} components, got {len(fracs)}")
        if any(f < 0 for f in fracs):
            raise InvalidMeasureError("measure components must be nonnegative")
        if sum(fracs) != 1:
            raise InvalidMeasureError(f"components sum to {sum(fracs)}, not 1")
        d = _lcm(f.denominator for f in fracs)
        return cls(alphabet, tuple(f.numerator * (d // f.denominator) for f in fracs), d)

    @property
    def m(self) -> int:
        return self.alphabet.m

    @property
    def components(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self.denominator) for x in self.numerators)

    def __getitem__(self, i: int) -> Fraction:
        return Fraction(self.numerators[i], self.denominator)

    def __len__(self) -> int:
        return len(self.numerators)

    def total(self) -> Fraction:
        # components share a denominator, so this is the exact rational sum
        return Fraction(sum(self.numerators), self.denominator)

    def reduced(self) -> EmpiricalMeasure:
        g = reduce(math.gcd, self.numerators, self.denominator)
        return EmpiricalMeasure(
            self.alphabet, tuple(x // g for x in self.numerators), self.denominator // g
        )

    def __eq__(self, other):
        if not isinstance(other, EmpiricalMeasure):
            return NotImplemented
        return self.alphabet == other.alphabet and all(
            a * other.denominator == b * self.denominator
            for a, b in zip(self.numerators, other.numerators)
        )

    def __hash__(self):
        r = self.reduced()
        return hash((r.alphabet, r.numerators, r.denominator))

    def __repr__(self):
        comps = ", ".join(str(c) for c in self.components)
        return f"EmpiricalMeasure(m={self.m}, ({comps}))"


def _check_prefix_len(n: int, length: int) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise PrefixOutOfRangeError(f"prefix length must be a nonnegative integer, got {n!r}")
    if n > length:
        raise PrefixOutOfRangeError(f"prefix length {n} exceeds sequence length {length}")
    return int(n)


def count_prefix(symbols, n: int, alphabet: Alphabet) -> CountVector:
    """Count each symbol among the first ``n`` entries of ``symbols``."""
    arr = as_symbols(symbols, alphabet)
    n = _check_prefix_len(n, arr.size)
    return CountVector.from_array(alphabet, bincount(arr[:n], alphabet.m))


def prefix_count_table(symbols, alphabet: Alphabet) -> np.ndarray:
    """Counts for every prefix length at once.

    Row n of the returned ``(len+1, m)`` int64 array holds the counts over the
    first n symbols; row 0 is all zeros.
    """
    arr = as_symbols(symbols, alphabet)
    table = np.zeros((arr.size + 1, alphabet.m), dtype=np.int64)
    if arr.size:
        table[np.arange(1, arr.size + 1), arr.astype(np.intp)] = 1
        np.cumsum(table, axis=0, out=table)
    return table


def symbol_frequency(c: CountVector, i: int) -> Fraction:
    if c.n == 0:
        raise UndefinedFrequencyError()
    i = c.alphabet.check_symbol(i)
    return Fraction(c.counts[i], c.n)


def empirical_measure(c: CountVector) -> EmpiricalMeasure:
    if c.n == 0:
        raise UndefinedFrequencyError()
    return EmpiricalMeasure(c.alphabet, c.counts, c.n)


def measure_uniform(a: Alphabet) -> EmpiricalMeasure:
    return EmpiricalMeasure(a, (1,) * a.m, a.m)


def measure_distance(p: EmpiricalMeasure, q: EmpiricalMeasure, metric: str = TOTAL_VARIATION) -> Fraction:
    """Exact total-variation or sup-deviation distance between two measures."""
    if p.alphabet != q.alphabet:
        raise IncompatibleMeasureError(f"measures over m={p.m} and m={q.m}")
    dp, dq = p.denominator, q.denominator
    # |p_i - q_i| * dp * dq, all integers
    diffs = [abs(a * dq - b * dp) for a, b in zip(p.numerators, q.numerators)]
    if metric == TOTAL_VARIATION:
        return Fraction(sum(diffs), 2 * dp * dq)
    if metric == SUP_DEVIATION:
        return Fraction(max(diffs), dp * dq)
    raise ValueError(f"unknown metric {metric!r}; expected {TOTAL_VARIATION!r} or {SUP_DEVIATION!r}")


def measure_entropy(p: EmpiricalMeasure, base: int | None = None) -> float:
    """Shannon entropy in ``base`` (default m, so the result lies in [0, 1]).

    Zero components contribute nothing (0 log 0 = 0).
    """
    base = p.m if base is None else base
    if base < 2:
        raise ValueError(f"entropy base must be >= 2, got {base}")
    d = p.denominator
    terms = []
    for x in p.numerators:
        if x:
            f = x / d
            terms.append(f * math.log(f))
    h = -math.fsum(terms) / math.log(base)
    if base == p.m:
        h = min(h, 1.0)  # rounding can overshoot the maximum
    return h + 0.0  # no negative zero
