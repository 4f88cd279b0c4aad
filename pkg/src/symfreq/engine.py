"""Chunked counting with exact prefix checkpoints and parallel merge."""

from __future__ import annotations

import multiprocessing
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import partial, reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CountOverflowError,
    DecodeError,
    IncompatibleCounterError,
    InsufficientInputError,
    InvalidScheduleError,
)
from .measure import (
    U64_MAX,
    Alphabet,
    CountVector,
    EmpiricalMeasure,
    as_symbols,
    bincount,
    empirical_measure,
)
from .sources import DEFAULT_CHUNK, FileStream, Segment, SymbolStream

#: File inputs at least this large are counted in worker processes when
#: parallelism > 1 (numpy counting holds the GIL, so threads would serialize).
PROCESS_THRESHOLD = 32 << 20

__all__ = [
    "CheckpointSchedule",
    "CheckpointRecord",
    "CheckpointSeries",
    "StreamCounter",
    "counter_new",
    "counter_feed",
    "counter_merge",
    "geometric_schedule",
    "run_checkpointed",
    "count_stream",
]


@dataclass(frozen=True)
class CheckpointSchedule:
    """Strictly increasing prefix lengths, all >= 1."""

    points: tuple[int, ...]

    def __post_init__(self):
        pts = tuple(int(p) for p in self.points)
        if not pts:
            raise InvalidScheduleError("checkpoint schedule is empty")
        if pts[0] < 1:
            raise InvalidScheduleError(f"checkpoints must be >= 1, got {pts[0]}")
        for a, b in zip(pts, pts[1:]):
            if b <= a:
                raise InvalidScheduleError(f"checkpoints must be strictly increasing ({a} then {b})")
        if pts[-1] > U64_MAX:
            raise InvalidScheduleError("checkpoint beyond 2**64-1")
        object.__setattr__(self, "points", pts)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @property
    def last(self) -> int:
        return self.points[-1]


def geometric_schedule(limit: int, ratio=2) -> CheckpointSchedule:
    """round(ratio**k) for k = 0, 1, ..., deduplicated and clipped to ``limit``.

    ``ratio`` may be anything :class:`fractions.Fraction` accepts ("1.5", 10);
    powers are exact and ties round half to even.
    """
    r = Fraction(ratio)
    if r <= 1:
        raise InvalidScheduleError(f"geometric ratio must be > 1, got {ratio}")
    if limit < 1:
        raise InvalidScheduleError("geometric schedule needs a stream of at least one symbol")
    points = []
    power = Fraction(1)
    while True:
        n = round(power)
        if n > limit:
            break
        if n >= 1 and (not points or n > points[-1]):
            points.append(n)
        power *= r
    return CheckpointSchedule(tuple(points))


@dataclass(frozen=True)
class CheckpointRecord:
    n: int
    counts: CountVector
    measure: EmpiricalMeasure


@dataclass(frozen=True)
class CheckpointSeries:
    schedule: CheckpointSchedule
    records: tuple[CheckpointRecord, ...]

    @property
    def alphabet(self) -> Alphabet:
        return self.records[0].counts.alphabet

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _record(alphabet: Alphabet, counts: np.ndarray) -> CheckpointRecord:
    cv = CountVector.from_array(alphabet, counts)
    return CheckpointRecord(cv.n, cv, empirical_measure(cv))


class StreamCounter:
    """Running symbol counts over a stream, fed chunk by chunk.

    Single-owner mutable state. If a schedule is attached, :meth:`feed` returns
    a record for every checkpoint reached inside the chunk, taken at exactly
    that prefix length.
    """

    def __init__(self, alphabet: Alphabet, schedule: CheckpointSchedule | Iterable[int] | None = None):
        self.alphabet = alphabet
        self._counts = np.zeros(alphabet.m, dtype=np.int64)
        self._big = None  # python-int counts once int64 could overflow
        self.consumed = 0
        if schedule is not None and not isinstance(schedule, CheckpointSchedule):
            schedule = CheckpointSchedule(tuple(schedule))
        self.schedule = schedule
        self._next = 0
        self.records: list[CheckpointRecord] = []

    @property
    def counts(self) -> tuple[int, ...]:
        if self._big is not None:
            return tuple(self._big)
        return tuple(int(c) for c in self._counts)

    @property
    def running(self) -> CountVector:
        return CountVector(self.alphabet, self.counts, self.consumed)

    def _add(self, delta: np.ndarray, k: int):
        if self.consumed + k > U64_MAX:
            raise CountOverflowError(f"more than 2**64-1 symbols ({self.consumed} + {k})")
        if self._big is None and self.consumed + k >= 1 << 62:
            self._big = [int(c) for c in self._counts]
        if self._big is not None:
            self._big = [a + int(b) for a, b in zip(self._big, delta)]
        else:
            self._counts += delta
        self.consumed += k

    def _snapshot(self, extra: np.ndarray | None = None) -> CheckpointRecord:
        base = self._big if self._big is not None else self._counts
        if extra is None:
            return _record(self.alphabet, base)
        return _record(self.alphabet, [int(a) + int(b) for a, b in zip(base, extra)])

    def feed(self, chunk, validate: bool = True) -> list[CheckpointRecord]:
        """Count ``chunk``; returns the checkpoint records it completed.

        ``validate=False`` skips the symbol range check for chunks that already
        passed an ingestion boundary (decoders, generators).
        """
        if validate:
            chunk = as_symbols(chunk, self.alphabet, base_offset=self.consumed)
        k = int(chunk.size)
        if self.consumed + k > U64_MAX:
            raise CountOverflowError(f"more than 2**64-1 symbols ({self.consumed} + {k})")
        emitted = []
        if self.schedule is not None:
            pts = self.schedule.points
            end = self.consumed + k
            while self._next < len(pts) and pts[self._next] <= end:
                cut = pts[self._next] - self.consumed
                emitted.append(self._snapshot(bincount(chunk[:cut], self.alphabet.m)))
                self._next += 1
        self._add(bincount(chunk, self.alphabet.m), k)
        self.records.extend(emitted)
        return emitted

    @property
    def pending(self) -> tuple[int, ...]:
        """Checkpoints not reached yet."""
        if self.schedule is None:
            return ()
        return self.schedule.points[self._next :]

    def copy(self) -> StreamCounter:
        other = StreamCounter(self.alphabet, self.schedule)
        other._counts = self._counts.copy()
        other._big = None if self._big is None else list(self._big)
        other.consumed = self.consumed
        other._next = self._next
        other.records = list(self.records)
        return other

    def __eq__(self, other):
        if not isinstance(other, StreamCounter):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.consumed == other.consumed
            and self.counts == other.counts
        )

    def __repr__(self):
        return f"StreamCounter(m={self.alphabet.m}, consumed={self.consumed}, counts={self.counts})"


def counter_new(alphabet: Alphabet) -> StreamCounter:
    return StreamCounter(alphabet)


def counter_feed(counter: StreamCounter, chunk) -> StreamCounter:
    """Functional form of :meth:`StreamCounter.feed`: returns an updated copy."""
    out = counter.copy()
    out.feed(chunk)
    return out


def counter_merge(left: StreamCounter, right: StreamCounter) -> StreamCounter:
    """Counts of ``left``'s segment followed by ``right``'s.

    The caller guarantees the two segments are adjacent in that order; only the
    counts are combined, schedules are not.
    """
    if left.alphabet != right.alphabet:
        raise IncompatibleCounterError(
            f"cannot merge counters over m={left.alphabet.m} and m={right.alphabet.m}"
        )
    total = left.consumed + right.consumed
    if total > U64_MAX:
        raise CountOverflowError(f"merged length {total} exceeds 2**64-1")
    out = StreamCounter(left.alphabet)
    if total >= 1 << 62:
        out._big = [a + b for a, b in zip(left.counts, right.counts)]
    else:
        out._counts = np.array(left.counts, dtype=np.int64) + np.array(right.counts, dtype=np.int64)
    out.consumed = total
    return out


def _pool(source: SymbolStream, workers: int, executor: str) -> Executor:
    if executor == "auto":
        big_file = isinstance(source, FileStream) and source.size >= PROCESS_THRESHOLD
        executor = "process" if big_file else "thread"
    if executor == "process":
        ctx = multiprocessing.get_context("fork" if "fork" in multiprocessing.get_all_start_methods() else None)
        return ProcessPoolExecutor(max_workers=workers, mp_context=ctx)
    if executor == "thread":
        return ThreadPoolExecutor(max_workers=workers)
    raise ValueError(f"unknown executor {executor!r}; expected 'auto', 'thread' or 'process'")


def _count_segment(
    seg: Segment, alphabet: Alphabet, local_points: Sequence[int], chunk_size: int
) -> tuple[np.ndarray, int, list[np.ndarray], DecodeError | None]:
    """Count one segment; also snapshot counts at segment-local prefix lengths.

    A decode error stops the segment after counting what precedes the bad
    byte; whether it matters is decided once segment offsets are known.
    """
    counts = np.zeros(alphabet.m, dtype=np.int64)
    consumed = 0
    snaps = []
    j = 0

    def take(chunk):
        nonlocal consumed, j, counts
        end = consumed + chunk.size
        while j < len(local_points) and local_points[j] <= end:
            snaps.append(counts + bincount(chunk[: local_points[j] - consumed], alphabet.m))
            j += 1
        counts = counts + bincount(chunk, alphabet.m)
        consumed = end

    try:
        for chunk in seg.chunks(chunk_size):
            take(chunk)
    except DecodeError as err:
        if err.partial is not None:
            take(err.partial)
        return counts, consumed, snaps, err
    return counts, consumed, snaps, None


def _run_sequential(source: SymbolStream, schedule: CheckpointSchedule, chunk_size: int) -> list[CheckpointRecord]:
    counter = StreamCounter(source.alphabet, schedule)
    try:
        for chunk in source.chunks(chunk_size, limit=schedule.last):
            counter.feed(chunk, validate=False)
            if not counter.pending:
                break
    except DecodeError as err:
        # bad bytes past the last checkpoint are never needed
        if err.partial is not None:
            counter.feed(err.partial[: schedule.last - counter.consumed], validate=False)
        if counter.pending:
            raise
    if counter.pending:
        raise InsufficientInputError(counter.pending[0], counter.consumed)
    return counter.records


def _segment_task(alphabet: Alphabet, chunk_size: int, seg: Segment, local_points: Sequence[int] = ()):
    """Picklable wrapper so segments can be counted in worker processes."""
    return _count_segment(seg, alphabet, local_points, chunk_size)


def _run_parallel(
    source: SymbolStream, schedule: CheckpointSchedule, parallelism: int, chunk_size: int, executor: str
) -> list[CheckpointRecord]:
    alphabet = source.alphabet
    points = schedule.points
    segs = source.segments(parallelism, limit=schedule.last)

    def local(seg: Segment) -> list[int]:
        if seg.start is None:
            return []
        return [p - seg.start for p in points if seg.start < p <= seg.start + (seg.hi - seg.lo)]

    count = partial(_segment_task, alphabet, chunk_size)
    with _pool(source, len(segs), executor) as pool:
        first = list(pool.map(count, segs, [local(s) for s in segs]))

        starts = []
        acc = 0
        for counts, consumed, _, err in first:
            starts.append(acc)
            acc += consumed
            if err is not None:
                if acc < points[-1]:
                    raise err
                break
        first = first[: len(starts)]
        if acc < points[-1]:
            raise InsufficientInputError(next(p for p in points if p > acc), acc)

        # segments whose symbol offset was unknown upfront replay for their checkpoints
        owned = [[p - s for p in points if s < p <= s + f[1]] for s, f in zip(starts, first)]
        replay = [i for i in range(len(first)) if segs[i].start is None and owned[i]]
        again = pool.map(count, [segs[i] for i in replay], [owned[i] for i in replay])
        redone = {i: res[2] for i, res in zip(replay, again)}

    records = []
    prefix = np.zeros(alphabet.m, dtype=np.int64)
    for i, (counts, _, snaps, _) in enumerate(first):
        for snap in redone.get(i, snaps):
            records.append(_record(alphabet, prefix + snap))
        prefix = prefix + counts
    return records


def run_checkpointed(
    source: SymbolStream,
    schedule: CheckpointSchedule | Iterable[int],
    parallelism: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
    executor: str = "auto",
) -> CheckpointSeries:
    """Empirical measure of ``source`` at every checkpoint in ``schedule``.

    With ``parallelism > 1`` the first ``schedule.last`` symbols are split into
    that many contiguous segments, counted on worker threads and stitched
    together by prefix sums. Workers are threads, or processes for large files
    (``executor`` overrides: "thread", "process"). The result does not depend on
    ``parallelism``, ``chunk_size`` or ``executor``.
    """
    if not isinstance(schedule, CheckpointSchedule):
        schedule = CheckpointSchedule(tuple(schedule))
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    if source.known_length is not None and source.known_length < schedule.last:
        first_bad = next(p for p in schedule.points if p > source.known_length)
        raise InsufficientInputError(first_bad, source.known_length)
    if parallelism == 1:
        records = _run_sequential(source, schedule, chunk_size)
    else:
        records = _run_parallel(source, schedule, parallelism, chunk_size, executor)
    return CheckpointSeries(schedule, tuple(records))


def count_stream(
    source: SymbolStream,
    limit: int | None = None,
    parallelism: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
    executor: str = "auto",
) -> CountVector:
    """Counts over the first ``limit`` symbols, or the whole (finite) stream.

    Segments are counted independently and combined with :func:`counter_merge`.
    """
    if limit is not None:
        if limit == 0:
            return CountVector.zeros(source.alphabet)
        return run_checkpointed(source, [limit], parallelism, chunk_size, executor).records[0].counts
    if source.unbounded:
        raise ValueError("an unbounded stream needs a limit")
    alphabet = source.alphabet
    segs = source.segments(parallelism)
    count = partial(_segment_task, alphabet, chunk_size)
    if len(segs) == 1:
        results = [count(segs[0])]
    else:
        with _pool(source, len(segs), executor) as pool:
            results = list(pool.map(count, segs))
    counters = []
    for counts, consumed, _, err in results:
        if err is not None:
            raise err
        c = StreamCounter(alphabet)
        c._add(counts, consumed)
        counters.append(c)
    return reduce(counter_merge, counters).running
