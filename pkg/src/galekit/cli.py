"""Command-line surface tying measures, gales, and conversion together.

Subcommands: verify, convert, trace, balance, scan, eval.  All reports
go to stdout as deterministic text; files are line-based so fixtures
stay auditable in version control.

Exit codes: 0 when every check passed or was merely inconclusive
(including a no-certificate advisory), 1 when some check certainly
failed or the input object certainly violates a precondition, 2 for
usage, parse, and depth-cap errors.

Tree-exhaustive commands walk 2^(depth+1) nodes, so depth is held to a
hard cap (default 20) unless --allow-deep is passed; path-linear
commands (trace, scan) are bounded by the stream instead.  Bitstreams
read as ASCII 0/1 with whitespace ignored, or as raw bytes taken most
significant bit first; --raw forces the byte reading.
"""

import argparse
import sys

from . import construct as ct
from . import gales
from . import measures as ms
from . import numerics as nm
from .errors import (
    DepthCap,
    DepthExceeded,
    DivergentSeries,
    GalekitError,
    MonotonicityViolation,
    NegativePayoff,
    NoCertificate,
    NonPositiveNode,
    NotWellBalanced,
    ParseError,
    RootUnbounded,
    UnknownStrategy,
    ZeroMeasureNode,
)

HARD_DEPTH_CAP = 20

# Errors certifying the mathematical object itself is defective map to
# exit 1; errors about malformed or oversized requests map to exit 2.
_OBJECT_DEFECTS = (
    NotWellBalanced,
    RootUnbounded,
    DivergentSeries,
    ZeroMeasureNode,
    NegativePayoff,
    MonotonicityViolation,
    NonPositiveNode,
)
_USAGE_DEFECTS = (ParseError, DepthCap, DepthExceeded, UnknownStrategy)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="ascii") as fh:
        return fh.read()


def read_bitstream(path: str, raw: bool = False) -> str:
    """Bits from a file: ASCII 0/1 (whitespace ignored) or raw bytes.

    Raw bytes expand most significant bit first.  Without --raw, a file
    whose non-whitespace content is all 0/1 characters reads as ASCII;
    anything else falls back to the byte reading.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if not raw:
        text = data.decode("ascii", errors="replace")
        stripped = "".join(text.split())
        if all(c in "01" for c in stripped):
            return stripped
    return "".join(format(b, "08b") for b in data)


def _check_cap(depth: int, allow_deep: bool) -> int:
    if depth > HARD_DEPTH_CAP and not allow_deep:
        raise DepthCap(
            f"depth {depth} exceeds the hard cap {HARD_DEPTH_CAP}; "
            "pass --allow-deep to walk the full tree anyway"
        )
    return depth


def _load_measure(args, parsed_ref: str | None = None) -> ms.Measure:
    """Measure from --measure, else the uniform builtin when permitted."""
    if getattr(args, "measure", None):
        return ms.parse_measure(_read_text(args.measure))
    if parsed_ref is None or parsed_ref == "uniform":
        return ms.Uniform()
    raise ParseError(
        f"gale file references measure {parsed_ref!r}; pass it via --measure"
    )


def _load_gale(args) -> gales.GaleSpec:
    """Gale from --gale file or --strategy closed form."""
    if getattr(args, "gale", None):
        parsed = gales.parse_gale(_read_text(args.gale))
        nu = _load_measure(args, parsed.measure_ref)
        return gales.build_gale(parsed, nu)
    nu = _load_measure(args)
    s = nm.parse_exponent(args.s)
    return gales.closed_gale(args.strategy, nu, s)


def _emit(lines) -> None:
    for line in lines:
        print(line)


# --- subcommands ---


def cmd_verify(args) -> int:
    depth = _check_cap(args.depth, args.allow_deep)
    if args.gale:
        g = _load_gale(args)
        report = gales.verify_gale(g, depth, args.precision)
        _emit(report.render())
        return 0 if report.certain_violations == 0 else 1
    nu = _load_measure(args)
    report = ms.verify_measure(nu, depth, args.precision)
    _emit(report.render())
    return 0 if report.ok else 1


def cmd_convert(args) -> int:
    plan = ct.parse_plan(_read_text(args.plan))
    _check_cap(plan.max_depth, args.allow_deep)
    parsed = gales.parse_gale(_read_text(args.gale))
    nu = _load_measure(args, parsed.measure_ref)
    src = gales.build_gale(parsed, nu)
    build = ct.build_dprime_uniform if args.closed_form else ct.build_dprime
    result = build(src, plan, stage=args.stage, threads=args.threads)
    text = gales.format_gale(result.gale, nu.kind)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(text)
    _emit(result.render())
    print(f"wrote {args.out}")
    return 0


def cmd_trace(args) -> int:
    g = _load_gale(args)
    prefix = read_bitstream(args.stream, args.raw)
    if args.depth is not None:
        prefix = prefix[: args.depth]
    thresholds = range(1, args.thresholds + 1)
    trace = gales.success_trace(g, prefix, thresholds, args.precision)
    _emit(trace.render())
    return 0


def cmd_balance(args) -> int:
    depth = _check_cap(args.depth, args.allow_deep)
    nu = _load_measure(args)
    status = 0
    try:
        cert = ms.suggest_balance(nu, depth, args.precision)
    except NoCertificate as exc:
        print(f"advisory: no balance certificate at depth {depth}: {exc}")
        cert = None
    if cert is not None:
        _emit(cert.describe())
        report = ms.check_balance(nu, cert, depth, args.precision)
        _emit(report.render())
        if not report.ok:
            status = 1
    if args.epsilon is not None:
        eps = nm.parse_exponent(args.epsilon)
        trace = ms.weak_balance_trace(nu, eps, depth, args.precision)
        _emit(trace.render())
    return status


def cmd_scan(args) -> int:
    nu = _load_measure(args)
    grid = [nm.parse_exponent(tok) for tok in args.grid.split(",") if tok]
    if not grid:
        raise ParseError("exponent grid must be nonempty")
    prefix = read_bitstream(args.stream, args.raw)
    if args.depth is not None:
        prefix = prefix[: args.depth]
    try:
        report = gales.dimension_scan(
            args.strategy, nu, prefix, grid, args.threshold, args.precision
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    _emit(report.render())
    return 0


def cmd_eval(args) -> int:
    g = _load_gale(args)
    w = ms.parse_node_label(args.node)
    value = g.value(w, args.precision)
    print(f"d({ms.node_label(w)}) = {nm.format_interval(value)}")
    return 0


# --- argument parsing ---


def _precision(token: str) -> int:
    value = int(token)
    if value < 8:
        raise argparse.ArgumentTypeError("precision must be at least 8")
    return value


def _positive(token: str) -> int:
    value = int(token)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonnegative(token: str) -> int:
    value = int(token)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def _add_common(p, depth_default=8) -> None:
    p.add_argument(
        "--precision", type=_precision, default=64, help="working precision bits"
    )
    p.add_argument(
        "--depth",
        type=_nonnegative,
        default=depth_default,
        help="tree depth / stream prefix length",
    )
    p.add_argument(
        "--allow-deep",
        action="store_true",
        help=f"override the hard depth cap of {HARD_DEPTH_CAP}",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galekit",
        description="rigorous enclosures for gales, supergales, and balanced measures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the gale law or the measure axioms")
    p.add_argument("--gale", help="gale table file to verify")
    p.add_argument("--measure", help="measure file (axioms checked when no --gale)")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convert", help="raise a supergale's exponent into a gale")
    p.add_argument("--gale", required=True, help="source payoff table file")
    p.add_argument("--measure", help="measure file backing the source")
    p.add_argument("--plan", required=True, help="conversion plan file")
    p.add_argument("--out", required=True, help="output gale file")
    p.add_argument("--stage", type=_nonnegative, default=None, help="staged-source stage")
    p.add_argument("--threads", type=_positive, default=1, help="parallel set builds")
    p.add_argument(
        "--closed-form",
        action="store_true",
        help="use the uniform-measure closed-form path",
    )
    p.add_argument("--allow-deep", action="store_true")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("trace", help="payoff values and threshold witnesses along a stream")
    p.add_argument("--gale", help="gale table file")
    p.add_argument("--strategy", choices=gales.CLOSED_FORMS, help="closed strategy")
    p.add_argument("--s", default="1", help="exponent for --strategy (a/2^k)")
    p.add_argument("--measure", help="measure file")
    p.add_argument("--stream", required=True, help="bitstream file")
    p.add_argument("--raw", action="store_true", help="force raw-byte bit reading")
    p.add_argument("--thresholds", type=_positive, default=5, help="check 2^1..2^T")
    p.add_argument("--precision", type=_precision, default=64)
    p.add_argument("--depth", type=_nonnegative, default=None, help="truncate stream")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("balance", help="derive and check a balance certificate")
    p.add_argument("--measure", required=True, help="measure file")
    p.add_argument(
        "--epsilon", default=None, help="also trace weak balance at this exponent"
    )
    _add_common(p)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("scan", help="success frontier of a strategy across exponents")
    p.add_argument("--strategy", required=True, help="closed strategy name")
    p.add_argument("--measure", help="measure file (uniform when omitted)")
    p.add_argument("--stream", required=True, help="bitstream file")
    p.add_argument("--raw", action="store_true")
    p.add_argument("--grid", required=True, help="comma-separated exponents a/2^k")
    p.add_argument("--threshold", type=_nonnegative, default=1, help="witness 2^i")
    p.add_argument("--precision", type=_precision, default=64)
    p.add_argument("--depth", type=_nonnegative, default=None, help="truncate stream")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("eval", help="payoff enclosure at one node")
    p.add_argument("--gale", help="gale table file")
    p.add_argument("--strategy", choices=gales.CLOSED_FORMS)
    p.add_argument("--s", default="1", help="exponent for --strategy (a/2^k)")
    p.add_argument("--measure", help="measure file")
    p.add_argument("--node", required=True, help="node label; the root is '-'")
    p.add_argument("--precision", type=_precision, default=64)
    p.set_defaults(func=cmd_eval)

    return parser


def _check_source_choice(parser, args) -> None:
    if args.command in ("trace", "eval"):
        if bool(args.gale) == bool(args.strategy):
            parser.error("pass exactly one of --gale and --strategy")
    if args.command == "verify" and not args.gale and not args.measure:
        parser.error("pass --gale and/or --measure")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_source_choice(parser, args)
    try:
        return args.func(args)
    except _OBJECT_DEFECTS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        where = f" (line {exc.line})" if exc.line is not None else ""
        print(f"ParseError{where}: {exc}", file=sys.stderr)
        return 2
    except _USAGE_DEFECTS as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, GalekitError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
