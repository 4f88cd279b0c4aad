"""Exact streaming symbol counts and empirical measures over m-ary alphabets."""

__version__ = "0.1.0"

from .analysis import (
    CONVERGED,
    NOT_CONVERGED,
    ConvergenceReport,
    ReportRow,
    ReportSummary,
    Verdict,
    build_report,
    verdict_simple_normality,
)
from .engine import (
    CheckpointRecord,
    CheckpointSchedule,
    CheckpointSeries,
    StreamCounter,
    count_stream,
    counter_feed,
    counter_merge,
    counter_new,
    geometric_schedule,
    run_checkpointed,
)
from .errors import *  # noqa: F401,F403
from .measure import (
    SUP_DEVIATION,
    TOTAL_VARIATION,
    Alphabet,
    CountVector,
    EmpiricalMeasure,
    alphabet_new,
    count_prefix,
    empirical_measure,
    measure_distance,
    measure_entropy,
    measure_uniform,
    prefix_count_table,
    symbol_frequency,
)
from .sources import (
    ASCII_DIGIT,
    RAW_BYTE,
    DecoderConfig,
    SymbolStream,
    decode_file,
    encode_symbols,
    from_symbols,
    gen_bernoulli,
    gen_champernowne,
    gen_periodic,
)
