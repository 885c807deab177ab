"""Probability measures on Cantor space with interval-valued node queries.

A measure assigns every binary string w the probability of its cylinder,
subject to value(root) = 1 and value(w) = value(w0) + value(w1).  Four
kinds are provided: the uniform measure, Bernoulli and first-order
Markov measures with interval parameters, and finite node tables read
from files.  Built-in kinds answer per-node queries by conditional
factorization, so deep levels never require materializing a tree.

Balance certificates bound a measure's decay: value(w) <= C * alpha^|w|
with 0 < alpha < 1, together with the derived exponential form
value(w) <= 2^(c - epsilon*|w|).  The derived form is checked against
certified powers of two fixed at certificate construction, so a measure
passing the (alpha, C) check at depth n is guaranteed to pass the
(c, epsilon) check at the same depth.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import numerics as nm
from .errors import DepthExceeded, NoCertificate, NonPositiveNode, ParseError
from .numerics import (
    DEFAULT_PRECISION,
    ONE,
    ZERO,
    Dyadic,
    DyadicExponent,
    DyadicInterval,
)

# Binary strings are plain str over {0,1}; the empty string is the root.

LAMBDA = ""


def check_bits(w: str) -> str:
    if any(c not in "01" for c in w):
        raise ValueError(f"binary string expected, got {w!r}")
    return w


def node_label(w: str) -> str:
    """Printable name of a node; the root is spelled '-'."""
    return w if w else "-"


def parse_node_label(token: str) -> str:
    return "" if token == "-" else check_bits(token)


def is_prefix(u: str, w: str) -> bool:
    return w.startswith(u)


def is_proper_prefix(u: str, w: str) -> bool:
    return len(u) < len(w) and w.startswith(u)


def proper_prefixes(w: str):
    """Prefixes w[0..n-1] for n < |w|, shortest first (root included)."""
    for n in range(len(w)):
        yield w[:n]


def strings_of_length(k: int):
    """All strings of one length in lexicographic order."""
    if k == 0:
        yield LAMBDA
        return
    for i in range(1 << k):
        yield format(i, f"0{k}b")


def strings_to_depth(n: int):
    """Canonical enumeration: ascending length, then lexicographic."""
    for k in range(n + 1):
        yield from strings_of_length(k)


class Measure:
    """Per-node interval query interface shared by the measure kinds."""

    kind = "abstract"

    def value(
        self,
        w: str,
        precision: int = DEFAULT_PRECISION,
        require_positive: bool = True,
    ) -> DyadicInterval:
        raise NotImplementedError

    def extend(
        self,
        w: str,
        bit: str,
        parent_value: DyadicInterval,
        precision: int = DEFAULT_PRECISION,
    ) -> DyadicInterval:
        """Value at w+bit given the value at w; O(1) for built-in kinds."""
        return self.value(w + bit, precision, require_positive=False)

    def max_depth(self) -> int | None:
        """Deepest supported level, or None when unbounded."""
        return None

    def _guard(self, iv: DyadicInterval, w: str, require_positive: bool) -> DyadicInterval:
        if require_positive and iv.lo <= ZERO:
            raise NonPositiveNode(
                f"measure not certainly positive at {node_label(w)}: {iv}"
            )
        return iv


class Uniform(Measure):
    """The coin-flipping measure: value(w) = 2^-|w| exactly."""

    kind = "uniform"

    def value(self, w, precision=DEFAULT_PRECISION, require_positive=True):
        return DyadicInterval.point(Dyadic(1, -len(w)))

    def extend(self, w, bit, parent_value, precision=DEFAULT_PRECISION):
        return nm.scale_pow2(parent_value, -1)


def uniform_value(w: str) -> DyadicInterval:
    """Exact singleton [2^-|w|, 2^-|w|]."""
    return DyadicInterval.point(Dyadic(1, -len(w)))


class Bernoulli(Measure):
    """Independent bits; p is the probability of the bit 1.

    value(w) = p^(#ones) * (1-p)^(#zeros), exact when p is a dyadic
    point; interval p widths propagate through endpoint products.
    """

    kind = "bernoulli"

    def __init__(self, p: DyadicInterval):
        if p.lo < ZERO or p.hi > ONE:
            raise ValueError(f"Bernoulli parameter outside [0,1]: {p}")
        self.p = p
        self.q = nm.sub(nm.IV_ONE, p)
        self._cache: dict = {}

    def value(self, w, precision=DEFAULT_PRECISION, require_positive=True):
        ones = w.count("1")
        return self._guard(self.profile_value(ones, len(w) - ones, precision), w, require_positive)

    def profile_value(self, ones: int, zeros: int, precision: int) -> DyadicInterval:
        """Value of any string with the given bit counts."""
        key = (ones, zeros, precision)
        hit = self._cache.get(key)
        if hit is None:
            hit = nm.mul(
                nm.pow(self.p, DyadicExponent(ones), precision),
                nm.pow(self.q, DyadicExponent(zeros), precision),
                precision,
            )
            self._cache[key] = hit
        return hit

    def extend(self, w, bit, parent_value, precision=DEFAULT_PRECISION):
        factor = self.p if bit == "1" else self.q
        return nm.mul(parent_value, factor, precision)


class Markov(Measure):
    """First-order chain: each bit's probability depends on the previous bit.

    Transitions are keyed by (state, bit) with state '-' before the first
    bit, then the bit just emitted.
    """

    kind = "markov"

    STATES = ("-", "0", "1")

    def __init__(self, transitions: dict):
        for state in self.STATES:
            for bit in "01":
                if (state, bit) not in transitions:
                    raise ValueError(f"missing transition ({state}, {bit})")
        self.transitions = {k: transitions[k] for k in sorted(transitions)}

    def _step(self, w: str, position: int) -> DyadicInterval:
        state = w[position - 1] if position > 0 else "-"
        return self.transitions[(state, w[position])]

    def value(self, w, precision=DEFAULT_PRECISION, require_positive=True):
        total = nm.IV_ONE
        for position in range(len(w)):
            total = nm.mul(total, self._step(w, position), precision)
        return self._guard(total, w, require_positive)

    def extend(self, w, bit, parent_value, precision=DEFAULT_PRECISION):
        state = w[-1] if w else "-"
        return nm.mul(parent_value, self.transitions[(state, bit)], precision)


class NodeTable(Measure):
    """Finite-depth measure defined by explicit per-node enclosures."""

    kind = "nodetable"

    def __init__(self, table: dict):
        if LAMBDA not in table:
            raise ValueError("node table must define the root")
        self.table = {check_bits(w): iv for w, iv in table.items()}
        depth = 0
        while all(w in self.table for w in strings_of_length(depth + 1)):
            depth += 1
        self.depth = depth

    def value(self, w, precision=DEFAULT_PRECISION, require_positive=True):
        iv = self.table.get(w)
        if iv is None:
            raise DepthExceeded(
                f"node {node_label(w)} beyond stored depth {self.depth}"
            )
        return self._guard(iv, w, require_positive)

    def max_depth(self):
        return self.depth


def measure_value(
    nu: Measure,
    w: str,
    precision: int = DEFAULT_PRECISION,
    require_positive: bool = True,
) -> DyadicInterval:
    """Enclosure of the measure at one node."""
    return nu.value(check_bits(w), precision, require_positive)


def walk_values(nu: Measure, depth: int, precision: int):
    """Yield (w, value) over the canonical order using O(1) child steps."""
    root = nu.value(LAMBDA, precision, require_positive=False)
    level = [(LAMBDA, root)]
    yield LAMBDA, root
    for _ in range(depth):
        nxt = []
        for w, val in level:
            for bit in "01":
                child = nu.extend(w, bit, val, precision)
                nxt.append((w + bit, child))
                yield w + bit, child
        level = nxt


# --- verification ---


@dataclass(frozen=True, slots=True)
class CheckRecord:
    status: str
    check: str
    w: str
    detail: str

    def render(self) -> str:
        return f"{self.status} {self.check} {node_label(self.w)} {self.detail}"


@dataclass(slots=True)
class MeasureReport:
    kind: str
    depth: int
    checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def render(self) -> list[str]:
        lines = [
            f"measure {self.kind} depth={self.depth} "
            f"nodes={self.checked} violations={len(self.violations)}"
        ]
        lines.extend(r.render() for r in self.violations)
        lines.append("RESULT " + ("PASS" if self.ok else "FAIL"))
        return lines


def verify_measure(
    nu: Measure, depth: int, precision: int = DEFAULT_PRECISION
) -> MeasureReport:
    """Check root mass, additivity, and positivity to the given depth.

    Additivity is an intersection test: value(w) and value(w0)+value(w1)
    must overlap (exact kinds give exact equality, which implies it).
    Violations are collected with witnesses; nothing raises.
    """
    limit = nu.max_depth()
    if limit is not None:
        depth = min(depth, limit)
    violations = []
    values = {}
    checked = 0
    for w, val in walk_values(nu, depth, precision):
        values[w] = val
        checked += 1
        if w == LAMBDA and not val.contains(ONE):
            violations.append(
                CheckRecord("FAIL", "root", w, f"value={val} does not enclose 1")
            )
        if val.lo <= ZERO:
            violations.append(
                CheckRecord("FAIL", "positivity", w, f"value={val} not certainly > 0")
            )
    for w, val in values.items():
        if len(w) >= depth:
            continue
        child_sum = nm.add(values[w + "0"], values[w + "1"])
        if not val.intersects(child_sum):
            violations.append(
                CheckRecord(
                    "FAIL",
                    "additivity",
                    w,
                    f"value={val} children={child_sum} disjoint",
                )
            )
    return MeasureReport(nu.kind, depth, checked, violations)


# --- balance certificates ---


_CERT_GRID_BITS = 6


def _max_pow2_exponent_below(target: Dyadic, precision: int) -> DyadicExponent:
    """Largest grid exponent q (grid 2^-6, adaptively finer near zero)
    with a certified bound 2^q >= target, searching downward; i.e. the
    certified -log2 of target rounded toward zero decay.

    Used with target = alpha.hi to pick epsilon = -q maximal such that
    2^(-epsilon) certifiably dominates alpha.
    """
    if target <= ZERO:
        raise ValueError("positive target required")
    # integer part: largest integer drop that still dominates
    e = target.exp + abs(target.man).bit_length()  # 2^e > target, exact
    q_int = e
    while nm.pow2(DyadicExponent(q_int - 1), precision).lo >= target:
        q_int -= 1
    # fractional refinement: largest extra drop j/2^grid that still
    # certifies.  The certified lower bound of pow2 is nonincreasing in
    # j at fixed grid, so binary search applies; when even the smallest
    # drop fails, retry on a finer grid, giving up at 2^-48.
    best = DyadicExponent(q_int)
    grid = _CERT_GRID_BITS
    while grid <= 48:

        def dominates(j: int) -> DyadicExponent | None:
            cand = DyadicExponent((q_int << grid) - j, grid)
            return cand if nm.pow2(cand, precision).lo >= target else None

        if dominates(1) is not None:
            lo_j, hi_j = 1, (1 << grid) - 1
            while lo_j < hi_j:
                mid = (lo_j + hi_j + 1) // 2
                if dominates(mid) is not None:
                    lo_j = mid
                else:
                    hi_j = mid - 1
            found = dominates(lo_j)
            assert found is not None
            return found
        grid += _CERT_GRID_BITS
    return best


class BalanceCertificate:
    """Decay bound value(w) <= C * alpha^|w| with a certified 2^(c-eps|w|) form.

    The stored dyadics pow2c_lower and pow2negeps_lower satisfy
    capC.hi <= pow2c_lower <= 2^c and alpha.hi <= pow2negeps_lower <= 2^(-eps),
    so any node passing the (alpha, C) comparison also passes the
    exponential-form comparison, and both certify the true bounds.
    """

    __slots__ = (
        "alpha",
        "capC",
        "c",
        "epsilon",
        "pow2c_lower",
        "pow2negeps_lower",
        "candidate_depth",
    )

    def __init__(
        self,
        alpha: DyadicInterval,
        capC: DyadicInterval,
        c: DyadicExponent,
        epsilon: DyadicExponent,
        precision: int = DEFAULT_PRECISION,
        candidate_depth: int | None = None,
    ):
        if not (ZERO < alpha.lo and alpha.hi < ONE):
            raise ValueError(f"alpha must lie inside (0,1): {alpha}")
        if capC.lo <= ZERO:
            raise ValueError(f"C must be positive: {capC}")
        if not epsilon > DyadicExponent(0):
            raise ValueError(f"epsilon must be positive: {epsilon}")
        pc = nm.pow2(c, precision).lo
        pa = nm.pow2(-epsilon, precision).lo
        if pc < capC.hi:
            raise ValueError(f"2^c = 2^{c} does not dominate C = {capC}")
        if pa < alpha.hi:
            raise ValueError(f"2^-epsilon with epsilon = {epsilon} does not dominate alpha = {alpha}")
        self.alpha = alpha
        self.capC = capC
        self.c = c
        self.epsilon = epsilon
        self.pow2c_lower = pc
        self.pow2negeps_lower = pa
        self.candidate_depth = candidate_depth

    @classmethod
    def derive(
        cls,
        alpha: DyadicInterval,
        capC: DyadicInterval,
        precision: int = DEFAULT_PRECISION,
        candidate_depth: int | None = None,
    ) -> "BalanceCertificate":
        """Choose (c, epsilon) from (alpha, C) on a dyadic grid.

        c is minimized and epsilon maximized subject to the certified
        dominations 2^c >= C and 2^(-epsilon) >= alpha; exact powers of
        two come out exact (uniform's (1/2, 1) yields c=0, epsilon=1).
        """
        if not (ZERO < alpha.lo and alpha.hi < ONE):
            raise ValueError(f"alpha must lie inside (0,1): {alpha}")
        if capC.lo <= ZERO:
            raise ValueError(f"C must be positive: {capC}")
        c = _max_pow2_exponent_below(capC.hi, precision)
        neg_eps = _max_pow2_exponent_below(alpha.hi, precision)
        epsilon = -neg_eps
        if not epsilon > DyadicExponent(0):
            raise NoCertificate(f"alpha = {alpha} admits no positive dyadic epsilon")
        return cls(alpha, capC, c, epsilon, precision, candidate_depth)

    def exponential_bound(self, length: int) -> Dyadic:
        """Exact dyadic lower bound on 2^(c - epsilon*length) that still
        dominates C * alpha^length."""
        return self.pow2c_lower * self.pow2negeps_lower**length

    def describe(self) -> list[str]:
        lines = [
            f"alpha {nm.format_interval(self.alpha)}",
            f"C {nm.format_interval(self.capC)}",
            f"c {nm.format_exponent(self.c)}",
            f"epsilon {nm.format_exponent(self.epsilon)}",
        ]
        if self.candidate_depth is not None:
            lines.append(
                f"candidate checked to depth {self.candidate_depth}; unproven beyond"
            )
        return lines


@dataclass(slots=True)
class BalanceReport:
    kind: str
    depth: int
    checked: int
    violations: list
    certificate: BalanceCertificate

    @property
    def ok(self) -> bool:
        return not self.violations

    def render(self) -> list[str]:
        lines = [
            f"balance {self.kind} depth={self.depth} "
            f"nodes={self.checked} violations={len(self.violations)}"
        ]
        lines.extend(self.certificate.describe())
        lines.extend(r.render() for r in self.violations)
        lines.append("RESULT " + ("PASS" if self.ok else "FAIL"))
        return lines


def _balance_node_checks(cert, w, val, alpha_pows, violations):
    k = len(w)
    if val.lo <= ZERO:
        violations.append(
            CheckRecord("FAIL", "positivity", w, f"value={val} not certainly > 0")
        )
    bound = cert.capC.lo * alpha_pows[k]
    if val.hi > bound:
        violations.append(
            CheckRecord(
                "FAIL",
                "alpha-bound",
                w,
                f"value.hi={nm.format_dyadic(val.hi)} > C*alpha^{k}={nm.format_dyadic(bound)}",
            )
        )
    exp_bound = cert.exponential_bound(k)
    if val.hi > exp_bound:
        violations.append(
            CheckRecord(
                "FAIL",
                "exp-bound",
                w,
                f"value.hi={nm.format_dyadic(val.hi)} > 2^(c-eps*{k})"
                f">={nm.format_dyadic(exp_bound)}",
            )
        )


def check_balance(
    nu: Measure,
    cert: BalanceCertificate,
    depth: int,
    precision: int = DEFAULT_PRECISION,
) -> BalanceReport:
    """Verify value(w).hi <= C.lo * alpha.lo^|w| and positivity to depth.

    Also checks the certified exponential form; by certificate
    construction an (alpha, C) pass forces an exponential-form pass.
    Uniform and Bernoulli kinds are checked per level profile (value
    depends only on bit counts), so depth 20 stays cheap; Markov and
    NodeTable kinds walk all 2^(depth+1) nodes.
    """
    limit = nu.max_depth()
    if limit is not None and depth > limit:
        raise DepthExceeded(f"measure stores depth {limit}, requested {depth}")
    alpha_pows = [cert.alpha.lo**k for k in range(depth + 1)]
    violations = []
    checked = 0
    if isinstance(nu, Uniform):
        for k in range(depth + 1):
            _balance_node_checks(cert, "0" * k, uniform_value("0" * k), alpha_pows, violations)
            checked += 1 << k
    elif isinstance(nu, Bernoulli):
        for k in range(depth + 1):
            for ones in range(k + 1):
                w = "1" * ones + "0" * (k - ones)
                val = nu.profile_value(ones, k - ones, precision)
                _balance_node_checks(cert, w, val, alpha_pows, violations)
            checked += 1 << k
    else:
        for w, val in walk_values(nu, depth, precision):
            _balance_node_checks(cert, w, val, alpha_pows, violations)
            checked += 1
    return BalanceReport(nu.kind, depth, checked, violations, cert)


_ROOT_GRID_BITS = 12


def _grid_kth_root_upper(value: Dyadic, k: int) -> Dyadic | None:
    """Least g on the grid j*2^-12, g <= 1, with g^k >= value; None if
    no g <= 1 works (value > 1)."""
    if value <= ZERO:
        return Dyadic(1, -_ROOT_GRID_BITS)
    if value > ONE:
        return None
    lo_j, hi_j = 1, 1 << _ROOT_GRID_BITS
    if Dyadic(lo_j, -_ROOT_GRID_BITS) ** k >= value:
        return Dyadic(lo_j, -_ROOT_GRID_BITS)
    # binary search: predicate g^k >= value is monotone in g
    while hi_j - lo_j > 1:
        mid = (lo_j + hi_j) // 2
        if Dyadic(mid, -_ROOT_GRID_BITS) ** k >= value:
            hi_j = mid
        else:
            lo_j = mid
    return Dyadic(hi_j, -_ROOT_GRID_BITS)


def suggest_balance(
    nu: Measure, depth: int, precision: int = DEFAULT_PRECISION
) -> BalanceCertificate:
    """Estimate a depth-bounded certificate candidate from observed decay.

    alpha is the largest per-level k-th root (on a 2^-12 grid, rounded
    up) of the level maxima of value(w).hi, so C = 1 suffices at every
    probed level by construction.  The result is a candidate valid to
    the probed depth only, never a proof.
    """
    if depth < 2:
        raise ValueError("suggest_balance needs depth >= 2")
    limit = nu.max_depth()
    if limit is not None and depth > limit:
        raise DepthExceeded(f"measure stores depth {limit}, requested {depth}")
    level_max: dict[int, Dyadic] = {}
    if isinstance(nu, Uniform):
        for k in range(1, depth + 1):
            level_max[k] = Dyadic(1, -k)
    elif isinstance(nu, Bernoulli):
        for k in range(1, depth + 1):
            level_max[k] = max(
                nu.profile_value(ones, k - ones, precision).hi for ones in range(k + 1)
            )
    else:
        for w, val in walk_values(nu, depth, precision):
            k = len(w)
            if k == 0:
                continue
            if k not in level_max or val.hi > level_max[k]:
                level_max[k] = val.hi
    alpha_obs: Dyadic | None = None
    for k in range(1, depth + 1):
        g = _grid_kth_root_upper(level_max[k], k)
        if g is None or g >= ONE:
            raise NoCertificate(
                f"observed decay root at depth {k} reaches 1; no alpha < 1 fits"
            )
        if alpha_obs is None or g > alpha_obs:
            alpha_obs = g
    assert alpha_obs is not None
    return BalanceCertificate.derive(
        DyadicInterval.point(alpha_obs),
        nm.IV_ONE,
        precision,
        candidate_depth=depth,
    )


# --- weak balance diagnostics ---


_WEAK_CHECK_DEPTH = 12


@dataclass(slots=True)
class WeakBalanceTrace:
    epsilon: DyadicExponent
    depth: int
    max_value: DyadicInterval
    max_witness: str
    growth_leaves: int
    growth_witness: str | None
    gale_check_ok: bool

    def render(self) -> list[str]:
        lines = [
            f"weak-balance epsilon={nm.format_exponent(self.epsilon)} depth={self.depth}",
            f"max f {nm.format_interval(self.max_value)} at {node_label(self.max_witness)}",
            f"monotone-growth paths to depth {self.depth}: {self.growth_leaves}",
        ]
        if self.growth_witness is not None:
            lines.append(f"growth witness {node_label(self.growth_witness)}")
        lines.append(
            "scaled-measure gale self-check "
            + ("PASS" if self.gale_check_ok else "FAIL")
        )
        return lines


def weak_balance_trace(
    nu: Measure,
    epsilon: DyadicExponent,
    depth: int,
    precision: int = DEFAULT_PRECISION,
) -> WeakBalanceTrace:
    """Trace f(w) = 2^(eps|w|) * value(w) to the given depth.

    Reports the maximum attained upper endpoint with its first witness
    in canonical order, and counts depth-n paths certified never to
    decrease (f(wb).lo >= f(w).hi at every step), a diagnostic for a
    nonempty success set.  It also self-checks that f satisfies the
    scaled gale law at exponent eps under the uniform measure, which
    encodes the measure's additivity; the self-check walks at most
    depth 12 to keep the table small.  Levels stream, so memory stays
    proportional to one level.
    """
    if not epsilon > DyadicExponent(0):
        raise ValueError("epsilon must be positive")
    limit = nu.max_depth()
    if limit is not None and depth > limit:
        raise DepthExceeded(f"measure stores depth {limit}, requested {depth}")
    check_cap = min(depth, _WEAK_CHECK_DEPTH)
    scales = [nm.pow2(epsilon * k, precision) for k in range(depth + 1)]
    root_val = nu.value(LAMBDA, precision, require_positive=False)
    f_root = nm.mul(scales[0], root_val, precision)
    f_check: dict[str, DyadicInterval] = {LAMBDA: f_root}
    # Levels are streamed as parallel lists indexed in canonical order;
    # the string at index i of level k is i written as k bits.
    nus = [root_val]
    fs = [f_root]
    grews = [True]
    max_value, max_at = f_root, (0, 0)
    for k in range(1, depth + 1):
        next_nus, next_fs, next_grews = [], [], []
        scale = scales[k]
        for i, (nu_iv, f_iv, grew) in enumerate(zip(nus, fs, grews)):
            w = format(i, f"0{k - 1}b") if k > 1 else LAMBDA
            for bit in "01":
                nu_b = nu.extend(w, bit, nu_iv, precision)
                f_b = nm.mul(scale, nu_b, precision)
                next_nus.append(nu_b)
                next_fs.append(f_b)
                next_grews.append(grew and f_b.lo >= f_iv.hi)
                if k <= check_cap:
                    f_check[w + bit] = f_b
                if f_b.hi > max_value.hi:
                    max_value, max_at = f_b, (k, len(next_fs) - 1)
        nus, fs, grews = next_nus, next_fs, next_grews
    growth_leaves = sum(grews)
    growth_witness = None
    for i, grew in enumerate(grews):
        if grew:
            growth_witness = format(i, f"0{depth}b") if depth > 0 else LAMBDA
            break
    max_k, max_i = max_at
    max_witness = format(max_i, f"0{max_k}b") if max_k > 0 else LAMBDA
    from . import gales

    f_gale = gales.GaleSpec.from_table(
        f_check, s=epsilon, strictness=gales.GALE, measure=Uniform()
    )
    report = gales.verify_gale(f_gale, check_cap, precision) if check_cap > 0 else None
    ok = report.certain_violations == 0 if report is not None else True
    return WeakBalanceTrace(
        epsilon,
        depth,
        max_value,
        max_witness,
        growth_leaves,
        growth_witness,
        ok,
    )


# --- serialization ---


def _parse_value_token(token: str, lineno: int) -> DyadicInterval:
    try:
        if token.startswith("["):
            return nm.parse_interval(token)
        d = nm.parse_dyadic(token)
        return DyadicInterval.point(d)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from exc


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_measure(text: str) -> Measure:
    """Parse the line-oriented measure format.

    Header `measure <kind>`; then per kind: bernoulli takes `p <value>`,
    markov takes six `state bit <value>` lines, nodetable takes
    `<node> <value>` lines with the root spelled '-'.  Values are dyadic
    or interval tokens; '#' starts a comment.
    """
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty measure file", 1)
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "measure":
        raise ParseError(f"expected 'measure <kind>', got {header!r}", lineno)
    kind = parts[1]
    body = lines[1:]
    if kind == "uniform":
        if body:
            raise ParseError("uniform takes no parameters", body[0][0])
        return Uniform()
    if kind == "bernoulli":
        if len(body) != 1:
            raise ParseError("bernoulli needs exactly one 'p <value>' line", lineno)
        blineno, bline = body[0]
        tokens = bline.split()
        if len(tokens) != 2 or tokens[0] != "p":
            raise ParseError(f"expected 'p <value>', got {bline!r}", blineno)
        return Bernoulli(_parse_value_token(tokens[1], blineno))
    if kind == "markov":
        transitions = {}
        for blineno, bline in body:
            tokens = bline.split()
            if len(tokens) != 3:
                raise ParseError(
                    f"expected '<state> <bit> <value>', got {bline!r}", blineno
                )
            state, bit, value = tokens
            if state not in Markov.STATES or bit not in "01":
                raise ParseError(f"bad transition key {state!r} {bit!r}", blineno)
            if (state, bit) in transitions:
                raise ParseError(f"duplicate transition {state} {bit}", blineno)
            transitions[(state, bit)] = _parse_value_token(value, blineno)
        try:
            return Markov(transitions)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
    if kind == "nodetable":
        table = {}
        for blineno, bline in body:
            tokens = bline.split()
            if len(tokens) != 2:
                raise ParseError(f"expected '<node> <value>', got {bline!r}", blineno)
            try:
                w = parse_node_label(tokens[0])
            except ValueError as exc:
                raise ParseError(str(exc), blineno) from exc
            if w in table:
                raise ParseError(f"duplicate node {tokens[0]}", blineno)
            table[w] = _parse_value_token(tokens[1], blineno)
        try:
            return NodeTable(table)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
    raise ParseError(f"unknown measure kind {kind!r}", lineno)


def format_measure(nu: Measure) -> str:
    """Serialize a measure; parse(format(m)) reproduces m bit-exactly."""
    if isinstance(nu, Uniform):
        return "measure uniform\n"
    if isinstance(nu, Bernoulli):
        return f"measure bernoulli\np {nm.format_interval(nu.p)}\n"
    if isinstance(nu, Markov):
        lines = ["measure markov"]
        for (state, bit), iv in sorted(nu.transitions.items()):
            lines.append(f"{state} {bit} {nm.format_interval(iv)}")
        return "\n".join(lines) + "\n"
    if isinstance(nu, NodeTable):
        lines = ["measure nodetable"]
        for w in sorted(nu.table, key=lambda x: (len(x), x)):
            lines.append(f"{node_label(w)} {nm.format_interval(nu.table[w])}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"cannot serialize measure kind {nu.kind!r}")
