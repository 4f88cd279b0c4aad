"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`SymfreqError`,
so the CLI can map the whole family onto exit status 2.
"""

from __future__ import annotations

__all__ = [
    "SymfreqError",
    "InvalidAlphabetError",
    "InvalidSymbolError",
    "PrefixOutOfRangeError",
    "UndefinedFrequencyError",
    "IncompatibleMeasureError",
    "IncompatibleCounterError",
    "CountOverflowError",
    "InsufficientInputError",
    "DecodeError",
    "InvalidPatternError",
    "InvalidMeasureError",
    "InvalidScheduleError",
    "EmptySeriesError",
    "InsufficientRowsError",
]


class SymfreqError(Exception):
    pass


class InvalidAlphabetError(SymfreqError, ValueError):
    pass


class InvalidSymbolError(SymfreqError, ValueError):
    def __init__(self, offset: int, value: int, m: int):
        self.offset = offset
        self.value = value
        self.m = m
        super().__init__(f"invalid symbol {value} at offset {offset} (alphabet size {m})")

    def __reduce__(self):
        return type(self), (self.offset, self.value, self.m)


class PrefixOutOfRangeError(SymfreqError, IndexError):
    pass


class UndefinedFrequencyError(SymfreqError, ZeroDivisionError):
    def __init__(self, msg: str = "frequency undefined at n=0"):
        super().__init__(msg)


class IncompatibleMeasureError(SymfreqError, ValueError):
    pass


class IncompatibleCounterError(SymfreqError, ValueError):
    pass


class CountOverflowError(SymfreqError, OverflowError):
    pass


class InsufficientInputError(SymfreqError):
    def __init__(self, n: int, available: int | None = None):
        self.n = n
        self.available = available
        msg = f"insufficient input: checkpoint n={n} is unreachable"
        if available is not None:
            msg += f" (stream has {available} symbols)"
        super().__init__(msg)

    def __reduce__(self):
        return type(self), (self.n, self.available)


class DecodeError(SymfreqError, ValueError):
    """``partial`` holds the symbols decoded from the same chunk before the bad byte."""

    def __init__(self, offset: int, value: int, reason: str, partial=None):
        self.offset = offset
        self.value = value
        self.reason = reason
        self.partial = partial
        super().__init__(f"decode error at offset {offset}: byte 0x{value:02x} {reason}")

    def __reduce__(self):
        return type(self), (self.offset, self.value, self.reason, self.partial)


class InvalidPatternError(SymfreqError, ValueError):
    pass


class InvalidMeasureError(SymfreqError, ValueError):
    pass


class InvalidScheduleError(SymfreqError, ValueError):
    pass


class EmptySeriesError(SymfreqError, ValueError):
    pass


class InsufficientRowsError(SymfreqError, ValueError):
    pass
