"""Gales and supergales with interval-certified payoff checks.

A payoff function d together with a measure nu and exponent s satisfies
the scaled betting law when nu(w)^s d(w) equals (gale) or dominates
(supergale) nu(w0)^s d(w0) + nu(w1)^s d(w1) at every node.  Payoffs come
in three shapes: exact finite tables, closed-form betting strategies
defined for every measure and exponent, and staged oracles that reveal
lower approximations one stage at a time.

Verification is one-sided by design: a node fails only when the
enclosures prove a violation; overlapping enclosures are reported
inconclusive, never failed, so rounding can suppress a PASS but can
never manufacture a FAIL.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import measures as ms
from . import numerics as nm
from .errors import (
    DepthExceeded,
    MonotonicityViolation,
    NegativePayoff,
    ParseError,
    UnknownStrategy,
)
from .numerics import (
    DEFAULT_PRECISION,
    ONE,
    ZERO,
    Dyadic,
    DyadicExponent,
    DyadicInterval,
)

GALE = "Gale"
SUPERGALE = "Supergale"

CLOSED_FORMS = ("constant", "uniform-scaling", "all-in-on-0", "spine-doubling")

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

_PASS_RECORD_CAP = 100_000


@dataclass(frozen=True, slots=True)
class OneSidedLower:
    """Certified lower bound with unknown upper end, from a staged oracle."""

    lo: Dyadic

    def render(self) -> str:
        return f"[{nm.format_dyadic(self.lo)},unbounded)"


class TablePayoff:
    """Exact finite payoff table; complete levels define its depth."""

    kind = "table"

    def __init__(self, table: dict):
        clean = {}
        for w, iv in table.items():
            ms.check_bits(w)
            if iv.lo < ZERO:
                raise NegativePayoff(
                    f"payoff at {ms.node_label(w)} reaches below zero: {iv}"
                )
            clean[w] = iv
        if ms.LAMBDA not in clean:
            raise ValueError("payoff table must define the root")
        self.table = clean
        depth = 0
        while all(w in clean for w in ms.strings_of_length(depth + 1)):
            depth += 1
        self.depth = depth

    def value(self, w: str) -> DyadicInterval:
        iv = self.table.get(w)
        if iv is None:
            raise DepthExceeded(
                f"node {ms.node_label(w)} beyond stored payoff depth {self.depth}"
            )
        return iv


class ClosedPayoff:
    """Named betting strategy valid for every measure and exponent.

    constant        keeps capital at nu(w)^(1-s): never bets.
    uniform-scaling 2^(-|w|) * nu(w)^(-s): flat stake in scaled capital.
    all-in-on-0     nu(w)^(-s) on the all-zeros spine, zero elsewhere.
    spine-doubling  the same spine values reached by per-step conditional
                    multipliers (nu(0^j)/nu(0^(j+1)))^s; doubles each
                    step exactly for the uniform measure at s = 1.

    All four satisfy the scaled law with equality by the additivity of
    the measure, so they verify as gales at every (nu, s).
    """

    kind = "closed"

    def __init__(self, name: str):
        if name not in CLOSED_FORMS:
            raise UnknownStrategy(
                f"unknown strategy {name!r}; choose from {', '.join(CLOSED_FORMS)}"
            )
        self.name = name
        self._spine: dict = {}

    def value(self, nu, s, w, precision) -> DyadicInterval:
        if self.name == "constant":
            t = DyadicExponent(1) - s
            return nm.pow(nu.value(w, precision, require_positive=False), t, precision)
        if self.name == "uniform-scaling":
            scaled = nm.pow(nu.value(w, precision, require_positive=False), -s, precision)
            return nm.scale_pow2(scaled, -len(w))
        spine = "1" not in w
        if not spine:
            return nm.IV_ZERO
        if self.name == "all-in-on-0":
            return nm.pow(nu.value(w, precision), -s, precision)
        # spine-doubling: cumulative product of per-step multipliers
        k = len(w)
        key = (k, precision, id(nu), s)
        hit = self._spine.get(key)
        if hit is not None:
            return hit
        acc = nm.IV_ONE
        for j in range(k):
            ratio = nm.div(
                nu.value("0" * j, precision),
                nu.value("0" * (j + 1), precision),
                precision,
            )
            acc = nm.mul(acc, nm.pow(ratio, s, precision), precision)
            self._spine[(j + 1, precision, id(nu), s)] = acc
        return acc


class StagedPayoff:
    """Stage-indexed lower approximations with a lazy monotonicity check."""

    kind = "staged"

    def __init__(self, oracle):
        self.oracle = oracle
        self._seen: dict = {}

    def lower(self, w: str, r: int) -> Dyadic:
        if r < 0:
            raise ValueError("stage must be nonnegative")
        val = self.oracle(w, r)
        if not isinstance(val, Dyadic):
            raise TypeError("staged oracle must return exact dyadics")
        if val < ZERO:
            raise NegativePayoff(
                f"staged payoff at {ms.node_label(w)} stage {r} is negative"
            )
        history = self._seen.setdefault(w, {})
        for r2, v2 in history.items():
            if r2 < r and v2 > val:
                raise MonotonicityViolation(
                    f"stage {r} value {val} below stage {r2} value {v2} at {ms.node_label(w)}"
                )
            if r2 > r and val > v2:
                raise MonotonicityViolation(
                    f"stage {r} value {val} above stage {r2} value {v2} at {ms.node_label(w)}"
                )
            if r2 == r and v2 != val:
                raise MonotonicityViolation(
                    f"stage {r} re-queried with a different value at {ms.node_label(w)}"
                )
        history[r] = val
        return val


class GaleSpec:
    """A payoff bound to its measure, exponent, and strictness."""

    __slots__ = ("nu", "s", "payoff", "strictness", "budgets")

    def __init__(self, nu, s, payoff, strictness, budgets=None):
        if strictness not in (GALE, SUPERGALE):
            raise ValueError(f"strictness must be {GALE} or {SUPERGALE}")
        self.nu = nu
        self.s = s
        self.payoff = payoff
        self.strictness = strictness
        self.budgets = budgets

    @classmethod
    def from_table(cls, table, s, strictness, measure, budgets=None):
        return cls(measure, s, TablePayoff(table), strictness, budgets)

    @classmethod
    def closed(cls, name, measure, s, strictness=GALE):
        return cls(measure, s, ClosedPayoff(name), strictness)

    @classmethod
    def staged(cls, oracle, measure, s, strictness=SUPERGALE):
        return cls(measure, s, StagedPayoff(oracle), strictness)

    def table_depth(self):
        return self.payoff.depth if isinstance(self.payoff, TablePayoff) else None

    def value(self, w, precision=DEFAULT_PRECISION, stage=None):
        if isinstance(self.payoff, TablePayoff):
            return self.payoff.value(w)
        if isinstance(self.payoff, ClosedPayoff):
            return self.payoff.value(self.nu, self.s, w, precision)
        if stage is None:
            raise ValueError("staged payoff requires a stage")
        return OneSidedLower(self.payoff.lower(w, stage))


def closed_gale(name, nu, s, strictness=GALE) -> GaleSpec:
    """Build one of the named closed strategies; UnknownStrategy otherwise."""
    return GaleSpec.closed(name, nu, s, strictness)


def eval_gale(g: GaleSpec, w: str, precision=DEFAULT_PRECISION, stage=None):
    """Enclosure of d(w); staged payoffs yield a one-sided lower bound."""
    return g.value(ms.check_bits(w), precision, stage)


def staged_lower(g: GaleSpec, w: str, r: int) -> Dyadic:
    """Stage-r lower approximation with the monotonicity contract enforced."""
    if not isinstance(g.payoff, StagedPayoff):
        raise ValueError("staged_lower requires a staged payoff")
    return g.payoff.lower(ms.check_bits(w), r)


def scaled_capital(g: GaleSpec, w: str, precision=DEFAULT_PRECISION) -> DyadicInterval:
    """Enclosure of D(w) = nu(w)^s d(w), the additively conserved stake."""
    nu_pow = nm.pow(g.nu.value(w, precision, require_positive=False), g.s, precision)
    return nm.mul(nu_pow, g.value(w, precision), precision)


@dataclass(frozen=True, slots=True)
class GaleCheckRecord:
    status: str
    w: str
    left: DyadicInterval
    right: DyadicInterval

    def render(self) -> str:
        return (
            f"{self.status} {ms.node_label(self.w)} "
            f"L={nm.format_interval(self.left)} R={nm.format_interval(self.right)}"
        )


@dataclass(slots=True)
class GaleReport:
    strictness: str
    s: DyadicExponent
    measure_kind: str
    depth: int
    counts: dict
    records: list
    pass_records_capped: bool = False

    @property
    def certain_violations(self) -> int:
        return self.counts[FAIL]

    @property
    def ok(self) -> bool:
        return self.counts[FAIL] == 0

    def render(self) -> list[str]:
        lines = [
            f"verify {self.strictness} s={nm.format_exponent(self.s)} "
            f"measure={self.measure_kind} depth={self.depth} "
            f"pass={self.counts[PASS]} inconclusive={self.counts[INCONCLUSIVE]} "
            f"fail={self.counts[FAIL]}"
        ]
        if self.pass_records_capped:
            lines.append(f"(PASS records beyond {_PASS_RECORD_CAP} summarized)")
        lines.extend(r.render() for r in self.records)
        lines.append("RESULT " + ("PASS" if self.ok else "FAIL"))
        return lines


def _node_status(strictness, left, right) -> str:
    if left.hi < right.lo:
        return FAIL
    if strictness == SUPERGALE:
        return PASS if left.lo >= right.hi else INCONCLUSIVE
    if left.lo > right.hi:
        return FAIL
    if left.is_point() and right.is_point() and left.lo == right.lo:
        return PASS
    return INCONCLUSIVE


def _budget_slack(g, w, nu_pow, precision) -> Dyadic:
    if g.budgets is None:
        return ZERO
    b = g.budgets.get(w)
    if b is None:
        return ZERO
    return nm.mul(nu_pow, DyadicInterval.point(b.hi), precision).hi


def verify_gale(g: GaleSpec, depth: int, precision=DEFAULT_PRECISION) -> GaleReport:
    """Check the scaled betting law at every node above the given depth.

    For each |w| < depth the enclosures L = nu(w)^s d(w) and
    R = nu(w0)^s d(w0) + nu(w1)^s d(w1) are compared.  A supergale node
    fails only when L.hi < R.lo; a gale node also fails when
    L.lo > R.hi.  Point-equal enclosures pass outright; everything else
    is inconclusive.  When the payoff carries truncation budgets, each
    side is widened upward by its nodes' budgets before the comparison,
    so a table within budget of an exact gale never fails.

    Levels are streamed, so memory stays proportional to one level.
    """
    if isinstance(g.payoff, StagedPayoff):
        raise ValueError("verify_gale requires a two-sided payoff table or closed form")
    table_limit = g.table_depth()
    if table_limit is not None and depth > table_limit:
        raise DepthExceeded(f"payoff stored to depth {table_limit}, requested {depth}")
    counts = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
    records = []
    capped = False

    def node_data(w, nu_iv):
        d_iv = g.value(w, precision)
        nu_pow = nm.pow(nu_iv, g.s, precision)
        stake = nm.mul(nu_pow, d_iv, precision)
        return stake, _budget_slack(g, w, nu_pow, precision)

    prev = None
    level_pairs = [(ms.LAMBDA, g.nu.value(ms.LAMBDA, precision, require_positive=False))]
    for k in range(depth + 1):
        data = [node_data(w, nu_iv) for w, nu_iv in level_pairs]
        if prev is not None:
            for i, ((w, _), (stake, slack)) in enumerate(zip(prev[0], prev[1])):
                c0, c0_slack = data[2 * i]
                c1, c1_slack = data[2 * i + 1]
                right = nm.add(c0, c1)
                left = DyadicInterval(stake.lo, stake.hi + slack)
                right = DyadicInterval(right.lo, right.hi + c0_slack + c1_slack)
                status = _node_status(g.strictness, left, right)
                counts[status] += 1
                if status == PASS and counts[PASS] > _PASS_RECORD_CAP:
                    capped = True
                else:
                    records.append(GaleCheckRecord(status, w, left, right))
        if k == depth:
            break
        nxt = []
        for w, nu_iv in level_pairs:
            for bit in "01":
                nxt.append((w + bit, g.nu.extend(w, bit, nu_iv, precision)))
        prev = (level_pairs, data)
        level_pairs = nxt
    return GaleReport(
        g.strictness,
        g.s,
        g.nu.kind,
        depth,
        counts,
        records,
        pass_records_capped=capped,
    )


def level_sum(g: GaleSpec, k: int, precision=DEFAULT_PRECISION) -> DyadicInterval:
    """Enclosure of the level stake sum over all strings of length k.

    For a supergale with d(root) <= 1 this never certainly exceeds
    d(root); callers compare against the root value.
    """
    table_limit = g.table_depth()
    if table_limit is not None and k > table_limit:
        raise DepthExceeded(f"payoff stored to depth {table_limit}, requested {k}")
    terms = []
    level_pairs = [(ms.LAMBDA, g.nu.value(ms.LAMBDA, precision, require_positive=False))]
    for _ in range(k):
        nxt = []
        for w, nu_iv in level_pairs:
            for bit in "01":
                nxt.append((w + bit, g.nu.extend(w, bit, nu_iv, precision)))
        level_pairs = nxt
    for w, nu_iv in level_pairs:
        nu_pow = nm.pow(nu_iv, g.s, precision)
        terms.append(nm.mul(nu_pow, g.value(w, precision), precision))
    return nm.sum_intervals(terms)


@dataclass(frozen=True, slots=True)
class ThresholdHit:
    exponent: int
    witness: str
    value: object

    def render(self) -> str:
        val = self.value.render() if isinstance(self.value, OneSidedLower) else nm.format_interval(self.value)
        return f"threshold 2^{self.exponent} witness {ms.node_label(self.witness)} value {val}"


@dataclass(slots=True)
class SuccessTrace:
    z: str
    values: list
    hits: list
    misses: list

    def render(self) -> list[str]:
        lines = [f"trace along {ms.node_label(self.z)} depth={len(self.z)}"]
        for w, val in self.values:
            shown = val.render() if isinstance(val, OneSidedLower) else nm.format_interval(val)
            lines.append(f"at {ms.node_label(w)} value {shown}")
        lines.extend(h.render() for h in self.hits)
        lines.extend(
            f"threshold 2^{i} no witness to depth {len(self.z)} (inconclusive)"
            for i in self.misses
        )
        return lines


def success_trace(
    g: GaleSpec,
    z_prefix: str,
    thresholds,
    precision=DEFAULT_PRECISION,
    stage=None,
) -> SuccessTrace:
    """Record payoff enclosures along a prefix and first threshold witnesses.

    A threshold 2^i is witnessed at the shortest prefix whose enclosure
    lies certainly above it (lower endpoint strictly greater).  Missing
    witnesses are reported as not-yet, never as failure: unbounded growth
    is not falsifiable at finite depth.
    """
    z = ms.check_bits(z_prefix)
    pending = sorted(set(thresholds))
    values = []
    hits = []
    for n in range(len(z) + 1):
        w = z[:n]
        val = g.value(w, precision, stage)
        values.append((w, val))
        while pending and val.lo > Dyadic(1, pending[0]):
            hits.append(ThresholdHit(pending[0], w, val))
            pending.pop(0)
    return SuccessTrace(z, values, hits, pending)


@dataclass(slots=True)
class ScanReport:
    strategy: str
    measure_kind: str
    z: str
    threshold: int
    entries: list

    def render(self) -> list[str]:
        lines = [
            f"scan strategy={self.strategy} measure={self.measure_kind} "
            f"stream-depth={len(self.z)} threshold=2^{self.threshold}",
            "empirical frontier, not a dimension computation",
        ]
        for s, witness in self.entries:
            if witness is None:
                lines.append(f"s={nm.format_exponent(s)} no witness")
            else:
                lines.append(
                    f"s={nm.format_exponent(s)} witnessed at {ms.node_label(witness)}"
                    f" depth={len(witness)}"
                )
        return lines


def dimension_scan(
    strategy: str,
    nu,
    z_prefix: str,
    s_grid,
    threshold: int,
    precision=DEFAULT_PRECISION,
) -> ScanReport:
    """Probe one closed strategy across an exponent grid along a prefix.

    Reports, for each s, whether the strategy's s-gale certainly exceeds
    the threshold somewhere along the prefix.  The output is an
    empirical success frontier at finite depth only.
    """
    grid = list(s_grid)
    if not grid:
        raise ValueError("exponent grid must be nonempty")
    for a, b in zip(grid, grid[1:]):
        if not a < b:
            raise ValueError("exponent grid must be strictly increasing")
    entries = []
    for s in grid:
        g = closed_gale(strategy, nu, s)
        trace = success_trace(g, z_prefix, [threshold], precision)
        witness = trace.hits[0].witness if trace.hits else None
        entries.append((s, witness))
    return ScanReport(strategy, nu.kind, z_prefix, threshold, entries)


# --- serialization ---


def format_gale(g: GaleSpec, measure_ref: str) -> str:
    """Serialize a table payoff with its measure reference.

    Node lines run in canonical order; a node's budget, when present,
    follows on its own trailer line.
    """
    if not isinstance(g.payoff, TablePayoff):
        raise ValueError("only table payoffs serialize")
    lines = [f"gale {nm.format_exponent(g.s)} {g.strictness} measure={measure_ref}"]
    for w in sorted(g.payoff.table, key=lambda x: (len(x), x)):
        lines.append(f"{ms.node_label(w)} {nm.format_interval(g.payoff.table[w])}")
        if g.budgets is not None and w in g.budgets:
            lines.append(f"budget {nm.format_interval(g.budgets[w])}")
    return "\n".join(lines) + "\n"


@dataclass(slots=True)
class ParsedGale:
    s: DyadicExponent
    strictness: str
    measure_ref: str
    table: dict
    budgets: dict


def parse_gale(text: str) -> ParsedGale:
    """Parse the gale file format; the measure reference is not resolved."""
    lines = list(ms._content_lines(text))
    if not lines:
        raise ParseError("empty gale file", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 4 or parts[0] != "gale" or not parts[3].startswith("measure="):
        raise ParseError(
            f"expected 'gale <s> <Gale|Supergale> measure=<file>', got {header!r}",
            lineno,
        )
    try:
        s = nm.parse_exponent(parts[1])
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from exc
    strictness = parts[2]
    if strictness not in (GALE, SUPERGALE):
        raise ParseError(f"strictness must be Gale or Supergale, got {strictness!r}", lineno)
    measure_ref = parts[3][len("measure="):]
    if not measure_ref:
        raise ParseError("empty measure reference", lineno)
    table: dict = {}
    budgets: dict = {}
    last_node = None
    for blineno, bline in lines[1:]:
        tokens = bline.split()
        if len(tokens) != 2:
            raise ParseError(f"expected two tokens, got {bline!r}", blineno)
        label, value = tokens
        if label == "budget":
            if last_node is None:
                raise ParseError("budget line before any node", blineno)
            if last_node in budgets:
                raise ParseError(f"duplicate budget for {ms.node_label(last_node)}", blineno)
            try:
                budgets[last_node] = nm.parse_interval(value)
            except ValueError as exc:
                raise ParseError(str(exc), blineno) from exc
            continue
        try:
            w = ms.parse_node_label(label)
        except ValueError as exc:
            raise ParseError(str(exc), blineno) from exc
        if w in table:
            raise ParseError(f"duplicate node {label}", blineno)
        try:
            table[w] = nm.parse_interval(value)
        except ValueError as exc:
            raise ParseError(str(exc), blineno) from exc
        last_node = w
    if not table:
        raise ParseError("gale file defines no nodes", lineno)
    return ParsedGale(s, strictness, measure_ref, table, budgets)


def build_gale(parsed: ParsedGale, measure) -> GaleSpec:
    return GaleSpec.from_table(
        parsed.table,
        parsed.s,
        parsed.strictness,
        measure,
        budgets=parsed.budgets or None,
    )
