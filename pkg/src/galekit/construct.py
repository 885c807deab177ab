"""Prefix-set payoffs and exponent raising for supergales.

Given a finite set U of binary strings and an exponent t, the payoff

    d_U^t(w) = (1 / nu(w)^t) * ( sum over u with wu in U of nu(wu)^t
             + sum over n < |w| with w[0..n-1] in U of nu(w[0..n-1])^t / 2^(|w|-n) )

is a nu-t-gale: capital flows toward the cylinders named by U.  Sorting
U by how many proper prefixes a member has inside U splits it into
prefix-free layers V_i, and d_U^t is the sum of the layer payoffs.

The conversion takes a supergale d at exponent s, collects the level
sets U_i of nodes certified to exceed 2^i, and assembles the gale
d' = sum of i * d_{U_i}^(s') at any strictly larger exponent s'.  Every
truncation (index cutoff, enumeration depth) is covered by an explicit
interval budget derived from the measure's balance certificate, so the
emitted table plus its budget brackets the certified ideal object.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import gales
from . import measures as ms
from . import numerics as nm
from .errors import (
    NotWellBalanced,
    ParseError,
    RootUnbounded,
    ZeroMeasureNode,
)
from .numerics import (
    DEFAULT_PRECISION,
    ONE,
    TWO,
    ZERO,
    Dyadic,
    DyadicExponent,
    DyadicInterval,
)


class StringSet:
    """Finite set of binary strings with its prefix-layer partition."""

    __slots__ = ("members", "_sorted", "_partition")

    def __init__(self, members):
        self.members = frozenset(ms.check_bits(w) for w in members)
        self._sorted = tuple(sorted(self.members, key=lambda w: (len(w), w)))
        self._partition = None

    def __contains__(self, w):
        return w in self.members

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        """Canonical order: ascending length, then lexicographic."""
        return iter(self._sorted)

    def __eq__(self, other):
        return isinstance(other, StringSet) and self.members == other.members

    def __hash__(self):
        return hash(self.members)

    def __repr__(self):
        shown = ",".join(ms.node_label(w) for w in self._sorted)
        return f"StringSet({{{shown}}})"

    def max_length(self) -> int:
        return len(self._sorted[-1]) if self._sorted else 0

    def partition(self):
        """Layers V_i: members with exactly i proper prefixes in the set."""
        if self._partition is None:
            layers: dict[int, list] = {}
            for w in self._sorted:
                i = sum(1 for p in ms.proper_prefixes(w) if p in self.members)
                layers.setdefault(i, []).append(w)
            self._partition = tuple(
                StringSet(layers.get(i, ())) for i in range(max(layers, default=-1) + 1)
            )
        return list(self._partition)


def partition_prefix_sets(U: StringSet):
    """The V_i partition of U, with its defining properties re-verified.

    Each layer must be prefix-free, the layers pairwise disjoint, and
    their union the whole set; a failure here is a bug, so it asserts.
    """
    layers = U.partition()
    seen: set = set()
    for V in layers:
        for w in V:
            for p in ms.proper_prefixes(w):
                assert p not in V.members, "layer contains a proper prefix pair"
        assert not (V.members & seen), "layers overlap"
        seen |= V.members
    assert seen == U.members, "layers do not cover the set"
    return layers


def eval_dUt(
    U: StringSet,
    t: DyadicExponent,
    nu: ms.Measure,
    w: str,
    precision: int = DEFAULT_PRECISION,
    tail: DyadicInterval | None = None,
) -> DyadicInterval:
    """Enclosure of d_U^t(w) by direct summation of both sums.

    Terms accumulate in canonical order (first sum over extensions in
    ascending member order, then prefix terms by ascending length), so
    two walks over the same inputs are bit-identical.  ``tail`` is an
    optional extra interval added inside the bracket before dividing;
    conversion passes the unseen-member mass bound here.
    """
    ms.check_bits(w)
    nu_w = nu.value(w, precision, require_positive=False)
    if nu_w.lo <= ZERO:
        raise ZeroMeasureNode(
            f"measure reaches zero at {ms.node_label(w)}; the payoff quotient is undefined"
        )
    bracket = nm.IV_ZERO
    for v in U:
        if v.startswith(w):
            term = nm.pow(nu.value(v, precision, require_positive=False), t, precision)
            bracket = nm.add(bracket, term)
    for n in range(len(w)):
        if w[:n] in U:
            term = nm.pow(nu.value(w[:n], precision, require_positive=False), t, precision)
            bracket = nm.add(bracket, nm.scale_pow2(term, n - len(w)))
    if tail is not None:
        bracket = nm.add(bracket, tail)
    return nm.div(bracket, nm.pow(nu_w, t, precision), precision)


def _eval_dUt_uniform(
    U: StringSet,
    t: DyadicExponent,
    w: str,
    precision: int,
    tail_scaled: DyadicInterval | None = None,
) -> DyadicInterval:
    """Closed form of d_U^t(w) for the uniform measure.

    The quotient collapses: extensions contribute 2^(-t|u|) and prefix
    terms 2^((t-1)(n-|w|)), with no division.  ``tail_scaled`` must
    already be divided by 2^(-t|w|) if supplied.
    """
    ms.check_bits(w)
    total = nm.IV_ZERO
    for v in U:
        if v.startswith(w):
            total = nm.add(total, nm.pow2(-t * (len(v) - len(w)), precision))
    for n in range(len(w)):
        if w[:n] in U:
            total = nm.add(total, nm.pow2((t - 1) * (len(w) - n), precision))
    if tail_scaled is not None:
        total = nm.add(total, tail_scaled)
    return total


@dataclass(slots=True)
class DUtReport:
    """Gale-law verdict for a d_U^t table plus the layer-sum identity."""

    gale_report: gales.GaleReport
    identity_failures: list

    @property
    def ok(self) -> bool:
        return self.gale_report.ok and not self.identity_failures

    def render(self) -> list[str]:
        lines = list(self.gale_report.render()[:-1])
        for w, whole, layered in self.identity_failures:
            lines.append(
                f"FAIL layer-identity {ms.node_label(w)} "
                f"whole={nm.format_interval(whole)} layered={nm.format_interval(layered)}"
            )
        lines.append("RESULT " + ("PASS" if self.ok else "FAIL"))
        return lines


def verify_dUt_is_gale(
    U: StringSet,
    t: DyadicExponent,
    nu: ms.Measure,
    depth: int,
    precision: int = DEFAULT_PRECISION,
) -> DUtReport:
    """Check the gale law for d_U^t to the given depth.

    Also re-derives the table as the sum over the V_i layers and flags
    any node where the two enclosures fail to intersect.
    """
    table = {
        w: eval_dUt(U, t, nu, w, precision) for w in ms.strings_to_depth(depth)
    }
    spec = gales.GaleSpec.from_table(table, t, gales.GALE, nu)
    report = gales.verify_gale(spec, depth, precision)
    layers = partition_prefix_sets(U)
    failures = []
    for w in ms.strings_to_depth(depth):
        layered = nm.sum_intervals(
            eval_dUt(V, t, nu, w, precision) for V in layers
        )
        if not layered.intersects(table[w]):
            failures.append((w, table[w], layered))
    return DUtReport(report, failures)


# --- level sets ---


@dataclass(slots=True)
class LevelSetFamily:
    """Certified level sets U_i of one payoff source.

    Members carry strict lower-endpoint evidence d(w) > 2^i, so the sets
    only ever undershoot the true level sets; straddling nodes are
    excluded and logged per index.  Staged sources yield no borderline
    log (no upper endpoints exist), and their membership grows with the
    stage, never shrinks.
    """

    source: gales.GaleSpec
    depth: int
    stage: int | None
    sets: dict
    borderline: dict

    def check_nesting(self) -> bool:
        idx = sorted(self.sets)
        return all(
            self.sets[b].members <= self.sets[a].members
            for a, b in zip(idx, idx[1:])
        )


def _threshold_family(source, values, indices, depth, stage) -> LevelSetFamily:
    sets = {}
    borderline = {}
    for i in sorted(set(indices)):
        thr = Dyadic(1, i)
        members = []
        near = []
        for w, val in values:
            if val.lo > thr:
                members.append(w)
            elif not isinstance(val, gales.OneSidedLower) and val.hi > thr:
                near.append(w)
        sets[i] = StringSet(members)
        borderline[i] = near
    family = LevelSetFamily(source, depth, stage, sets, borderline)
    assert family.check_nesting()
    return family


def enumerate_level_sets(
    d: gales.GaleSpec,
    indices,
    depth: int,
    stage: int | None = None,
    precision: int = DEFAULT_PRECISION,
) -> LevelSetFamily:
    """Collect certified members of U_i = {w : d(w) > 2^i} to a depth."""
    values = [
        (w, d.value(w, precision, stage)) for w in ms.strings_to_depth(depth)
    ]
    return _threshold_family(d, values, indices, depth, stage)


# --- conversion plans ---


class ConversionPlan:
    """Exponent pair, balance certificate, and truncation cutoffs."""

    __slots__ = ("s", "sprime", "cert", "max_index", "max_depth", "precision")

    def __init__(
        self,
        s: DyadicExponent,
        sprime: DyadicExponent,
        cert: ms.BalanceCertificate,
        max_index: int,
        max_depth: int,
        precision: int = DEFAULT_PRECISION,
    ):
        if not sprime > s:
            raise ValueError(
                f"target exponent {sprime} must strictly exceed source {s}"
            )
        if max_index < 1:
            raise ValueError("max_index must be at least 1")
        if max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if precision < 8:
            raise ValueError("plan precision must be at least 8")
        self.s = s
        self.sprime = sprime
        self.cert = cert
        self.max_index = max_index
        self.max_depth = max_depth
        self.precision = precision

    def gap(self) -> DyadicExponent:
        return self.sprime - self.s

    def decay_ratio(self) -> DyadicInterval:
        """Enclosure of the per-level ratio 2^(-(s'-s)*eps) < 1."""
        return nm.pow2(-(self.gap() * self.cert.epsilon), self.precision)

    def geometric_factor(self) -> DyadicInterval:
        """Enclosure of 2^((s'-s)c) / (1 - 2^(-(s'-s)eps))."""
        scale = nm.pow2(self.gap() * self.cert.c, self.precision)
        return nm.geometric_tail(self.decay_ratio(), scale, self.precision)

    def describe(self) -> list[str]:
        return [
            f"s {nm.format_exponent(self.s)}",
            f"sprime {nm.format_exponent(self.sprime)}",
            f"max_index {self.max_index}",
            f"max_depth {self.max_depth}",
            f"precision {self.precision}",
        ] + self.cert.describe()


def tail_bound(plan: ConversionPlan, i: int, k0: int) -> DyadicInterval:
    """Enclosure of the level-mass tail sum from level k0 for index i.

    Closed geometric form of sum over k >= k0 of 2^((s'-s)(c - eps k) - i);
    with k0 = 0 this is the root bound 2^(-i) times the geometric factor.
    Raises DivergentSeries when the ratio enclosure reaches 1.
    """
    gap = plan.gap()
    start = gap * (plan.cert.c - plan.cert.epsilon * k0) - i
    scale = nm.pow2(start, plan.precision)
    return nm.geometric_tail(plan.decay_ratio(), scale, plan.precision)


def index_tail_weight(max_index: int) -> Dyadic:
    """Exact value of the weight tail: sum over i > I of i * 2^-i."""
    return Dyadic(max_index + 2, -max_index)


def index_partial_weight(max_index: int) -> Dyadic:
    """Exact value of the truncated weight sum over i <= I of i * 2^-i."""
    return TWO - index_tail_weight(max_index)


# --- conversion ---


@dataclass(slots=True)
class ConversionResult:
    """Built gale table, its budgets, and the bookkeeping behind them."""

    gale: gales.GaleSpec
    plan: ConversionPlan
    family: LevelSetFamily
    budget_core: DyadicInterval
    root_bound: DyadicInterval
    normalization: DyadicInterval | None
    closed_form: bool

    def render(self) -> list[str]:
        lines = [
            f"convert s={nm.format_exponent(self.plan.s)} "
            f"sprime={nm.format_exponent(self.plan.sprime)} "
            f"I={self.plan.max_index} K={self.plan.max_depth} "
            f"path={'uniform-closed-form' if self.closed_form else 'general'}"
        ]
        if self.normalization is not None:
            lines.append(
                f"normalized by {nm.format_interval(self.normalization)}"
            )
        for i in sorted(self.family.sets):
            near = len(self.family.borderline.get(i, ()))
            lines.append(
                f"U_{i} members={len(self.family.sets[i])} borderline-excluded={near}"
            )
        lines.append(f"budget-core {nm.format_interval(self.budget_core)}")
        lines.append(f"root-bound {nm.format_interval(self.root_bound)}")
        lines.append(
            f"root-value {nm.format_interval(self.gale.payoff.table[ms.LAMBDA])}"
        )
        return lines


def _source_values(d, plan, stage):
    """Payoff values to plan depth, normalized so the root is at most 1."""
    precision = plan.precision
    nodes = list(ms.strings_to_depth(plan.max_depth))
    raw = [(w, d.value(w, precision, stage)) for w in nodes]
    root = raw[0][1]
    if isinstance(root, gales.OneSidedLower):
        if root.lo > ONE:
            raise RootUnbounded(
                "root payoff lower bound exceeds 1 and a one-sided source "
                "cannot be renormalized"
            )
        return raw, None
    if root.hi <= ONE:
        return raw, None
    factor = nm.recip(DyadicInterval.point(root.hi), precision)
    scaled = [(w, nm.mul(val, factor, precision)) for w, val in raw]
    if scaled[0][1].lo > ONE:
        raise RootUnbounded(
            f"root payoff {nm.format_interval(scaled[0][1])} still exceeds 1 "
            "after normalization"
        )
    return scaled, factor


def _build(d, plan, stage, threads, closed_form) -> ConversionResult:
    nu = d.nu
    precision = plan.precision
    K = plan.max_depth
    I = plan.max_index
    balance = ms.check_balance(nu, plan.cert, K, precision)
    if not balance.ok:
        first = balance.violations[0]
        raise NotWellBalanced(
            f"measure fails its balance certificate at depth {K}: "
            f"{len(balance.violations)} violations, first {first.render()}"
        )
    values, factor = _source_values(d, plan, stage)
    family = _threshold_family(d, values, range(1, I + 1), K, stage)
    nodes = [w for w, _ in values]

    k_geom = plan.geometric_factor()
    tail_terms = [
        nm.mul(DyadicInterval.from_int(i), tail_bound(plan, i, K + 1), precision)
        for i in range(1, I + 1)
    ]
    index_tail = nm.mul(
        DyadicInterval.point(index_tail_weight(I)), k_geom, precision
    )
    budget_core = nm.add(nm.sum_intervals(tail_terms), index_tail)
    root_bound = nm.mul(
        DyadicInterval.point(index_partial_weight(I)), k_geom, precision
    )

    def build_index(i: int) -> dict:
        U = family.sets[i]
        weight = DyadicInterval.from_int(i)
        out = {}
        for w in nodes:
            if closed_form:
                val = _eval_dUt_uniform(U, plan.sprime, w, precision)
            else:
                val = eval_dUt(U, plan.sprime, nu, w, precision)
            out[w] = nm.mul(weight, val, precision)
        return out

    indices = list(range(1, I + 1))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_index = list(pool.map(build_index, indices))
    else:
        per_index = [build_index(i) for i in indices]

    table = {}
    budgets = {}
    for w in nodes:
        table[w] = nm.sum_intervals(contrib[w] for contrib in per_index)
        denom = nm.pow(nu.value(w, precision, require_positive=False), plan.sprime, precision)
        scale = nm.recip(denom, precision)
        budgets[w] = DyadicInterval(ZERO, nm.mul(scale, budget_core, precision).hi)
    built = gales.GaleSpec.from_table(table, plan.sprime, gales.GALE, nu, budgets=budgets)
    return ConversionResult(
        built, plan, family, budget_core, root_bound, factor, closed_form
    )


def build_dprime(
    d: gales.GaleSpec,
    plan: ConversionPlan,
    stage: int | None = None,
    threads: int = 1,
) -> ConversionResult:
    """Assemble the exponent-raised gale with explicit truncation budgets.

    The emitted table is a genuine gale in its own right (it encloses
    the truncated certified object node for node), so it passes
    verify_gale outright; the per-node budgets additionally bound what
    the two truncations discarded, scaled by 1/nu(w)^(s').  Refuses with
    NotWellBalanced when the measure fails the plan's certificate, and
    with RootUnbounded when the source's root cannot be brought under 1.
    """
    return _build(d, plan, stage, threads, closed_form=False)


def build_dprime_uniform(
    d: gales.GaleSpec,
    plan: ConversionPlan,
    stage: int | None = None,
    threads: int = 1,
) -> ConversionResult:
    """Conversion specialized to the uniform measure's closed form.

    Same contract as the general path; the per-node quotient collapses
    into pure powers of two, giving an independent implementation that
    must agree with the general path within combined interval widths.
    """
    if not isinstance(d.nu, ms.Uniform):
        raise ValueError("the closed-form path requires the uniform measure")
    return _build(d, plan, stage, threads, closed_form=True)


# --- plan files ---


_PLAN_KEYS = ("s", "sprime", "alpha", "C", "max_index", "max_depth", "precision")


def parse_plan(text: str) -> ConversionPlan:
    """Parse the plan file format: one `<key> <value>` pair per line.

    Keys: s, sprime (exponents a/2^k), alpha, C (dyadics), max_index,
    max_depth, precision (integers).  All seven are required; the
    balance certificate is derived from alpha and C at the stated
    precision.
    """
    seen: dict = {}
    lines = list(ms._content_lines(text))
    for lineno, line in lines:
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected '<key> <value>', got {line!r}", lineno)
        key, value = tokens
        if key not in _PLAN_KEYS:
            raise ParseError(f"unknown plan key {key!r}", lineno)
        if key in seen:
            raise ParseError(f"duplicate plan key {key!r}", lineno)
        try:
            if key in ("s", "sprime"):
                seen[key] = nm.parse_exponent(value)
            elif key in ("alpha", "C"):
                seen[key] = nm.parse_dyadic(value)
            else:
                seen[key] = int(value)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
    missing = [k for k in _PLAN_KEYS if k not in seen]
    if missing:
        raise ParseError(f"missing plan keys: {', '.join(missing)}", 1)
    cert = ms.BalanceCertificate.derive(
        DyadicInterval.point(seen["alpha"]),
        DyadicInterval.point(seen["C"]),
        seen["precision"],
    )
    return ConversionPlan(
        seen["s"],
        seen["sprime"],
        cert,
        seen["max_index"],
        seen["max_depth"],
        seen["precision"],
    )


def format_plan(plan: ConversionPlan) -> str:
    """Serialize a plan; requires point alpha and C (as plan files carry)."""
    if not plan.cert.alpha.is_point() or not plan.cert.capC.is_point():
        raise ValueError("plan files carry point alpha and C")
    lines = [
        f"s {nm.format_exponent(plan.s)}",
        f"sprime {nm.format_exponent(plan.sprime)}",
        f"alpha {nm.format_dyadic(plan.cert.alpha.lo)}",
        f"C {nm.format_dyadic(plan.cert.capC.lo)}",
        f"max_index {plan.max_index}",
        f"max_depth {plan.max_depth}",
        f"precision {plan.precision}",
    ]
    return "\n".join(lines) + "\n"
