"""Command-line interface.

Exit status is 0 on success and 2 on any usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import __version__
from .analysis import DEFAULT_WINDOW, build_report, verdict_simple_normality
from .engine import count_stream, geometric_schedule, run_checkpointed
from .errors import SymfreqError, UndefinedFrequencyError
from .measure import (
    SUP_DEVIATION,
    TOTAL_VARIATION,
    Alphabet,
    EmpiricalMeasure,
    empirical_measure,
    measure_distance,
    measure_uniform,
)
from .serialize import count_document, format_rational, measure_strings, report_csv, report_json
from .sources import (
    ASCII_DIGIT,
    DEFAULT_CHUNK,
    DEFAULT_SKIP,
    RAW_BYTE,
    DecoderConfig,
    decode_file,
    encode_symbols,
    gen_bernoulli,
    gen_champernowne,
    gen_periodic,
)

GEN_HELP = """\
generator specs:
  champernowne              base-m representations of 1, 2, 3, ... concatenated
  periodic:PATTERN          PATTERN repeated forever; digits 0-9 then a-z (periodic:0110)
  bernoulli:P0,P1,...       i.i.d. symbols with the given rational probabilities
                            (bernoulli:1/3,1/3,1/3); SplitMix64 seeded by --seed

--base defaults to 2, or to the number of probabilities for bernoulli.
"""


class UsageError(SymfreqError):
    pass


def _int(text: str) -> int:
    """Nonnegative integer; accepts 1e6-style notation when it is exact."""
    try:
        f = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if f.denominator != 1 or f < 0:
        raise argparse.ArgumentTypeError(f"not a nonnegative integer: {text!r}")
    return int(f)


def _positive(text: str) -> int:
    v = _int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _int_list(text: str) -> list[int]:
    return [_int(t) for t in text.split(",") if t.strip()]


def _decoder(args) -> DecoderConfig:
    mode = RAW_BYTE if args.decode == "raw" else ASCII_DIGIT
    skip = DEFAULT_SKIP if args.skip is None else frozenset(args.skip.encode("latin-1"))
    return DecoderConfig(mode, skip)


def _alphabet(args, default: int = 2) -> Alphabet:
    return Alphabet(args.base if args.base is not None else default)


def _generator(spec: str, base: int | None, seed: int):
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "champernowne":
        if arg:
            raise UsageError("champernowne takes no arguments (use --base)")
        return gen_champernowne(Alphabet(base or 2))
    if name == "periodic":
        alphabet = Alphabet(base or 2)
        try:
            pattern = [int(ch, 36) for ch in arg]
        except ValueError:
            raise UsageError(f"periodic pattern must be base-36 digits, got {arg!r}") from None
        return gen_periodic(pattern, alphabet)
    if name == "bernoulli":
        parts = [p for p in arg.split(",") if p.strip()]
        stream = gen_bernoulli(parts, seed)
        if base is not None and base != stream.alphabet.m:
            raise UsageError(f"--base {base} does not match {stream.alphabet.m} bernoulli probabilities")
        return stream
    raise UsageError(f"unknown generator {spec!r}")


def _target(text: str, alphabet: Alphabet) -> EmpiricalMeasure:
    if text.strip().lower() == "uniform":
        return measure_uniform(alphabet)
    return EmpiricalMeasure.from_fractions(alphabet, [p for p in text.split(",") if p.strip()])


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def cmd_count(args) -> int:
    alphabet = _alphabet(args)
    source = decode_file(args.input, alphabet, _decoder(args))
    counts = count_stream(source, args.n, args.parallel, args.chunk_size)
    if counts.n == 0:
        raise UndefinedFrequencyError("frequency undefined at n=0")
    doc = count_document(counts, empirical_measure(counts))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "m", "counts", "measure"])
        w.writerow([doc["n"], doc["m"], " ".join(map(str, doc["counts"])), " ".join(doc["measure"])])
        text = buf.getvalue()
    else:
        text = json.dumps(doc) + "\n"
    _emit(text, None)
    return 0


def _trace_source(args):
    if (args.input is None) == (args.gen is None):
        raise UsageError("trace needs exactly one of INPUT or --gen")
    if args.gen is not None:
        return _generator(args.gen, args.base, args.seed)
    return decode_file(args.input, _alphabet(args), _decoder(args))


def cmd_trace(args) -> int:
    source = _trace_source(args)
    alphabet = source.alphabet
    if args.checkpoints is not None and args.geometric is not None:
        raise UsageError("--checkpoints and --geometric are mutually exclusive")
    if args.checkpoints is not None:
        points = args.checkpoints
    else:
        limit = args.max_n
        if limit is None:
            if source.unbounded:
                raise UsageError("a generator needs --checkpoints or --max-n")
            limit = source.known_length
            if limit is None:
                limit = count_stream(source, None, args.parallel, args.chunk_size).n
        points = geometric_schedule(limit, args.geometric or 2).points
    series = run_checkpointed(source, points, args.parallel, args.chunk_size)
    report = build_report(series, _target(args.target, alphabet))
    verdict = None
    if args.epsilon is not None:
        verdict = verdict_simple_normality(report, args.epsilon, args.window)
    if args.format == "csv":
        text = report_csv(report)
    else:
        text = report_json(report, verdict)
    _emit(text, args.out)
    return 0


def cmd_gen(args) -> int:
    source = _generator(args.gen, args.base, args.seed)
    mode = RAW_BYTE if args.encode == "raw" else ASCII_DIGIT
    DecoderConfig(mode).check(source.alphabet)
    fh = sys.stdout.buffer if args.out == "-" else open(args.out, "wb")
    try:
        if args.count:
            for chunk in source.chunks(args.chunk_size, limit=args.count):
                fh.write(encode_symbols(chunk, source.alphabet, mode))
    finally:
        if fh is not sys.stdout.buffer:
            fh.close()
        else:
            fh.flush()
    return 0


def cmd_compare(args) -> int:
    alphabet = _alphabet(args)
    cfg = _decoder(args)
    left = decode_file(args.left, alphabet, cfg)
    right = decode_file(args.right, alphabet, cfg)
    n = args.n
    if n is None:
        n = min(count_stream(left).n, count_stream(right).n)
    cl = count_stream(left, n)
    cr = count_stream(right, n)
    if n == 0:
        raise UndefinedFrequencyError("frequency undefined at n=0")
    p, q = empirical_measure(cl), empirical_measure(cr)
    doc = {
        "n": n,
        "m": alphabet.m,
        "left": {"input": args.left, "counts": list(cl.counts), "measure": measure_strings(p)},
        "right": {"input": args.right, "counts": list(cr.counts), "measure": measure_strings(q)},
        "total_variation": format_rational(measure_distance(p, q, TOTAL_VARIATION)),
        "sup_deviation": format_rational(measure_distance(p, q, SUP_DEVIATION)),
    }
    _emit(json.dumps(doc) + "\n", None)
    return 0


def _add_decoder_flags(p):
    p.add_argument("--decode", choices=["ascii", "raw"], default="ascii",
                   help="ascii: digit characters 0-9a-z; raw: one symbol per byte (default ascii)")
    p.add_argument("--skip", metavar="CHARS", default=None,
                   help="bytes ignored in ascii mode (default: space, tab, CR, LF)")


def _add_common(p, base_help="alphabet size m (default 2)"):
    p.add_argument("--base", "-m", type=int, default=None, help=base_help)
    p.add_argument("--parallel", type=_positive, default=1, help="worker count (output never depends on it)")
    p.add_argument("--chunk-size", type=_positive, default=DEFAULT_CHUNK, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symfreq",
        description="Exact symbol counts and empirical measures of m-ary sequences.",
        epilog=GEN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count symbols in a file")
    p.add_argument("input")
    _add_common(p)
    _add_decoder_flags(p)
    p.add_argument("--n", type=_int, default=None, help="prefix length (default: whole input)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser(
        "trace", help="empirical measure at checkpoints, with distances to a target",
        epilog=GEN_HELP, formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--gen", metavar="SPEC", default=None, help="generator instead of a file (see below)")
    p.add_argument("--seed", type=int, default=0, help="seed for bernoulli (default 0)")
    _add_common(p)
    _add_decoder_flags(p)
    p.add_argument("--checkpoints", type=_int_list, default=None, metavar="N1,N2,...")
    p.add_argument("--geometric", type=Fraction, default=None, metavar="R",
                   help="checkpoints round(R**k) up to the stream length or --max-n (default R=2)")
    p.add_argument("--max-n", type=_positive, default=None, help="upper bound for --geometric")
    p.add_argument("--target", default="uniform", help="'uniform' or P0,P1,... (default uniform)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--epsilon", type=Fraction, default=None,
                   help="also report a finite-prefix normality verdict at this tolerance (json only)")
    p.add_argument("--window", type=_positive, default=DEFAULT_WINDOW)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("gen", help="write generated symbols to a file", epilog=GEN_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--gen", metavar="SPEC", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base", "-m", type=int, default=None)
    p.add_argument("--count", type=_int, required=True, help="number of symbols N")
    p.add_argument("--encode", choices=["ascii", "raw"], default="ascii")
    p.add_argument("--out", required=True, help="output path, '-' for stdout")
    p.add_argument("--chunk-size", type=_positive, default=DEFAULT_CHUNK, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("compare", help="measures of two inputs and their distances")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--base", "-m", type=int, default=None, help="alphabet size m (default 2)")
    _add_decoder_flags(p)
    p.add_argument("--n", type=_int, default=None, help="prefix length (default: shorter input)")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SymfreqError, OSError, ValueError) as exc:
        print(f"symfreq: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
