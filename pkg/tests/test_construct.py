"""Tests for prefix-set payoffs and the exponent-raising conversion.

Oracles: a literal transcription of the two-sum payoff formula (term
for term, same primitives, same canonical order) that built tables must
match bit for bit, and an exact Fraction evaluation for integer
exponents over point measures that enclosures must contain.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from galekit import construct as ct
from galekit import gales
from galekit import measures as ms
from galekit import numerics as nm
from galekit.errors import (
    DepthExceeded,
    NotWellBalanced,
    ParseError,
    RootUnbounded,
    ZeroMeasureNode,
)
from galekit.numerics import Dyadic, DyadicExponent, DyadicInterval

ONE = DyadicExponent(1)
HALF = DyadicExponent(1, 1)
THREE_HALVES = DyadicExponent(3, 1)


def point(man: int, exp: int = 0) -> DyadicInterval:
    return DyadicInterval.point(Dyadic(man, exp))


def as_fraction(d: Dyadic) -> Fraction:
    return Fraction(d.man) * Fraction(2) ** d.exp


def iv_contains_fraction(iv: DyadicInterval, f: Fraction) -> bool:
    return as_fraction(iv.lo) <= f <= as_fraction(iv.hi)


def doubling_table(depth: int) -> dict:
    table = {}
    for w in ms.strings_to_depth(depth):
        val = Dyadic(1, len(w)) if "1" not in w else nm.ZERO
        table[w] = DyadicInterval.point(val)
    return table


def doubling_source(depth: int) -> gales.GaleSpec:
    return gales.GaleSpec.from_table(
        doubling_table(depth), ONE, gales.GALE, ms.Uniform()
    )


def uniform_plan(max_index: int, max_depth: int, precision: int = 64) -> ct.ConversionPlan:
    cert = ms.BalanceCertificate.derive(point(1, -1), point(1, 0), precision)
    return ct.ConversionPlan(ONE, THREE_HALVES, cert, max_index, max_depth, precision)


# --- string sets and the layer partition ---


def test_stringset_canonical_order():
    U = ct.StringSet(["1", "01", "0", "", "00"])
    assert list(U) == ["", "0", "1", "00", "01"]
    assert "01" in U and "10" not in U
    assert len(U) == 5
    assert U.max_length() == 2
    assert ct.StringSet([]).max_length() == 0


def test_stringset_rejects_bad_bits():
    with pytest.raises(ValueError):
        ct.StringSet(["0", "2"])


def test_stringset_equality_and_hash():
    assert ct.StringSet(["0", "1"]) == ct.StringSet(["1", "0"])
    assert hash(ct.StringSet(["0"])) == hash(ct.StringSet(["0"]))
    assert ct.StringSet(["0"]) != ct.StringSet(["1"])


def test_partition_single_root():
    layers = ct.partition_prefix_sets(ct.StringSet([""]))
    assert len(layers) == 1
    assert layers[0] == ct.StringSet([""])


def test_partition_chain():
    layers = ct.partition_prefix_sets(ct.StringSet(["", "0", "00"]))
    assert [set(V.members) for V in layers] == [{""}, {"0"}, {"00"}]


def test_partition_mixed():
    layers = ct.partition_prefix_sets(ct.StringSet(["0", "1", "01"]))
    assert [set(V.members) for V in layers] == [{"0", "1"}, {"01"}]


def test_partition_antichain_is_single_layer():
    U = ct.StringSet(["00", "01", "10", "11"])
    layers = ct.partition_prefix_sets(U)
    assert len(layers) == 1
    assert layers[0] == U


def test_partition_empty():
    assert ct.partition_prefix_sets(ct.StringSet([])) == []


@given(st.lists(st.text(alphabet="01", max_size=5), max_size=10))
def test_partition_layers_cover_and_are_prefix_free(words):
    U = ct.StringSet(words)
    layers = ct.partition_prefix_sets(U)
    union = set()
    for V in layers:
        for w in V:
            assert all(w[:n] not in V.members for n in range(len(w)))
        union |= V.members
    assert union == U.members


# --- payoff evaluation ---


def test_eval_root_set_is_identically_one():
    U = ct.StringSet([""])
    uni = ms.Uniform()
    for w in ("", "0", "1", "0110", "111"):
        assert ct.eval_dUt(U, ONE, uni, w) == point(1)


def test_eval_singleton_zero():
    U = ct.StringSet(["0"])
    uni = ms.Uniform()
    assert ct.eval_dUt(U, ONE, uni, "") == point(1, -1)
    assert ct.eval_dUt(U, ONE, uni, "0") == point(1)
    assert ct.eval_dUt(U, ONE, uni, "1") == point(0)
    assert ct.eval_dUt(U, ONE, uni, "00") == point(1)


def test_eval_fractional_exponent_root():
    U = ct.StringSet(["0"])
    val = ct.eval_dUt(U, HALF, ms.Uniform(), "")
    target = nm.pow2(DyadicExponent(-1, 1))
    assert val.intersects(target)
    assert as_fraction(val.width()) < Fraction(1, 2**50)


def test_eval_bernoulli_quarter():
    nu = ms.Bernoulli(point(1, -2))
    U = ct.StringSet(["1"])
    assert ct.eval_dUt(U, ONE, nu, "") == point(1, -2)
    assert ct.eval_dUt(U, ONE, nu, "1") == point(1)
    assert ct.eval_dUt(U, ONE, nu, "11") == point(2)


def test_eval_tail_argument():
    U = ct.StringSet([])
    assert ct.eval_dUt(U, ONE, ms.Uniform(), "", tail=point(1, -3)) == point(1, -3)
    with_tail = ct.eval_dUt(U, ONE, ms.Uniform(), "0", tail=point(1, -3))
    assert with_tail == point(1, -2)


def test_eval_zero_measure_node_refused():
    nu = ms.NodeTable({"": point(1), "0": point(1), "1": point(0)})
    with pytest.raises(ZeroMeasureNode):
        ct.eval_dUt(ct.StringSet(["0"]), ONE, nu, "1")


def literal_oracle(U, t, nu, w, precision):
    """Term-for-term transcription of the defining two-sum formula."""
    total = nm.IV_ZERO
    for v in sorted(U.members, key=lambda x: (len(x), x)):
        if v.startswith(w):
            total = nm.add(
                total, nm.pow(nu.value(v, precision, require_positive=False), t, precision)
            )
    for n in range(len(w)):
        if w[:n] in U.members:
            powed = nm.pow(nu.value(w[:n], precision, require_positive=False), t, precision)
            total = nm.add(total, nm.scale_pow2(powed, n - len(w)))
    denom = nm.pow(nu.value(w, precision, require_positive=False), t, precision)
    return nm.div(total, denom, precision)


def test_eval_matches_literal_oracle_exactly():
    rng = random.Random(7)
    uni = ms.Uniform()
    bern = ms.Bernoulli(point(1, -2))
    exponents = [HALF, DyadicExponent(3, 2), ONE, DyadicExponent(5, 2)]
    for trial in range(220):
        words = [
            "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
            for _ in range(rng.randint(0, 6))
        ]
        U = ct.StringSet(words)
        t = rng.choice(exponents)
        nu = rng.choice([uni, bern])
        w = "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
        got = ct.eval_dUt(U, t, nu, w, 64)
        want = literal_oracle(U, t, nu, w, 64)
        assert got == want, f"trial {trial}: {got} != {want}"


def test_eval_contains_fraction_oracle():
    rng = random.Random(11)
    uni = ms.Uniform()
    bern = ms.Bernoulli(point(1, -2))

    def nu_frac(nu, w):
        if isinstance(nu, ms.Uniform):
            return Fraction(1, 2 ** len(w))
        p = Fraction(1, 4)
        ones = w.count("1")
        return p**ones * (1 - p) ** (len(w) - ones)

    for _ in range(60):
        words = [
            "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
            for _ in range(rng.randint(0, 5))
        ]
        U = ct.StringSet(words)
        t = rng.choice([1, 2])
        nu = rng.choice([uni, bern])
        w = "".join(rng.choice("01") for _ in range(rng.randint(0, 3)))
        first = sum(
            (nu_frac(nu, v) ** t for v in U if v.startswith(w)), Fraction(0)
        )
        second = sum(
            (
                nu_frac(nu, w[:n]) ** t * Fraction(1, 2 ** (len(w) - n))
                for n in range(len(w))
                if w[:n] in U
            ),
            Fraction(0),
        )
        truth = (first + second) / nu_frac(nu, w) ** t
        got = ct.eval_dUt(U, DyadicExponent(t), nu, w, 64)
        assert iv_contains_fraction(got, truth)


# --- the payoff is a gale ---


def test_dUt_gale_singleton_uniform():
    report = ct.verify_dUt_is_gale(ct.StringSet(["0"]), ONE, ms.Uniform(), 6)
    assert report.ok
    assert report.gale_report.certain_violations == 0
    assert report.identity_failures == []


def test_dUt_gale_chain_bernoulli_fractional():
    nu = ms.Bernoulli(point(1, -2))
    U = ct.StringSet(["", "0", "00"])
    report = ct.verify_dUt_is_gale(U, DyadicExponent(3, 2), nu, 5)
    assert report.ok


def test_dUt_gale_randomized():
    rng = random.Random(23)
    uni = ms.Uniform()
    bern = ms.Bernoulli(point(1, -2))
    for _ in range(20):
        words = [
            "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
            for _ in range(rng.randint(1, 6))
        ]
        t = rng.choice([HALF, ONE, DyadicExponent(5, 2)])
        nu = rng.choice([uni, bern])
        report = ct.verify_dUt_is_gale(ct.StringSet(words), t, nu, 5)
        assert report.ok, f"U={words} t={t}"


def test_dUt_report_render_flags_identity_failure():
    good = ct.verify_dUt_is_gale(ct.StringSet(["0"]), ONE, ms.Uniform(), 2)
    broken = ct.DUtReport(good.gale_report, [("0", point(1), point(2))])
    assert not broken.ok
    lines = broken.render()
    assert lines[-1] == "RESULT FAIL"
    assert any("layer-identity 0 " in line for line in lines)


# --- level sets ---


def test_level_sets_doubling():
    src = doubling_source(5)
    family = ct.enumerate_level_sets(src, [1, 2, 3], 5)
    assert family.sets[1] == ct.StringSet(["00", "000", "0000", "00000"])
    assert family.sets[2] == ct.StringSet(["000", "0000", "00000"])
    assert family.sets[3] == ct.StringSet(["0000", "00000"])
    assert family.borderline == {1: [], 2: [], 3: []}
    assert family.check_nesting()


def test_level_sets_threshold_is_strict():
    src = doubling_source(4)
    family = ct.enumerate_level_sets(src, [2], 4)
    assert "00" not in family.sets[2]
    assert "000" in family.sets[2]


def test_level_sets_constant_one_empty():
    src = gales.closed_gale("constant", ms.Uniform(), ONE)
    family = ct.enumerate_level_sets(src, [0, 1], 4)
    assert len(family.sets[0]) == 0
    assert len(family.sets[1]) == 0
    assert family.borderline == {0: [], 1: []}


def test_level_sets_borderline_logged():
    table = doubling_table(3)
    table["01"] = DyadicInterval(Dyadic(15, -3), Dyadic(17, -3))
    src = gales.GaleSpec.from_table(table, ONE, gales.SUPERGALE, ms.Uniform())
    family = ct.enumerate_level_sets(src, [1], 3)
    assert "01" not in family.sets[1]
    assert family.borderline[1] == ["01"]


def growing_oracle(w, r):
    """Stage-r lower bounds for the 0-spine doubling payoff, capped at 2^r."""
    if "1" in w:
        return nm.ZERO
    return Dyadic(1, min(len(w), r))


def test_level_sets_staged_grow_with_stage():
    src = gales.GaleSpec.staged(growing_oracle, ms.Uniform(), ONE)
    early = ct.enumerate_level_sets(src, [1, 2], 5, stage=1)
    late = ct.enumerate_level_sets(src, [1, 2], 5, stage=5)
    assert early.sets[1].members < late.sets[1].members
    assert len(early.sets[2]) == 0
    assert late.sets[2] == ct.StringSet(["000", "0000", "00000"])
    assert early.borderline == {1: [], 2: []}


# --- conversion plans ---


def test_plan_validates():
    cert = ms.BalanceCertificate.derive(point(1, -1), point(1, 0))
    with pytest.raises(ValueError):
        ct.ConversionPlan(ONE, ONE, cert, 4, 6)
    with pytest.raises(ValueError):
        ct.ConversionPlan(THREE_HALVES, ONE, cert, 4, 6)
    with pytest.raises(ValueError):
        ct.ConversionPlan(ONE, THREE_HALVES, cert, 0, 6)
    with pytest.raises(ValueError):
        ct.ConversionPlan(ONE, THREE_HALVES, cert, 4, 0)
    with pytest.raises(ValueError):
        ct.ConversionPlan(ONE, THREE_HALVES, cert, 4, 6, precision=4)


def test_plan_gap_and_ratio():
    plan = uniform_plan(4, 6)
    assert plan.gap() == DyadicExponent(1, 1)
    assert plan.decay_ratio() == nm.pow2(DyadicExponent(-1, 1), 64)


def test_geometric_factor_value():
    factor = uniform_plan(4, 6).geometric_factor()
    assert as_fraction(factor.lo) > Fraction(27, 8)
    assert as_fraction(factor.hi) < Fraction(7, 2)
    assert as_fraction(factor.width()) < Fraction(1, 2**55)


def test_tail_bound_matches_closed_form():
    plan = uniform_plan(4, 6)
    got = ct.tail_bound(plan, 3, 0)
    want = nm.geometric_tail(plan.decay_ratio(), nm.pow2(DyadicExponent(-3), 64), 64)
    assert got == want


def test_tail_bound_start_level():
    plan = uniform_plan(4, 6)
    shifted = ct.tail_bound(plan, 3, 2)
    want = nm.geometric_tail(plan.decay_ratio(), nm.pow2(DyadicExponent(-4), 64), 64)
    assert shifted == want


def test_index_weights_exact():
    assert ct.index_tail_weight(3) == Dyadic(5, -3)
    assert ct.index_partial_weight(3) == Dyadic(11, -3)
    for I in range(1, 12):
        partial = sum(
            (Fraction(i, 2**i) for i in range(1, I + 1)), Fraction(0)
        )
        assert as_fraction(ct.index_partial_weight(I)) == partial
        assert as_fraction(ct.index_tail_weight(I)) == 2 - partial


# --- building the raised gale ---


def test_build_doubling_passes_verify():
    res = ct.build_dprime(doubling_source(6), uniform_plan(4, 6))
    report = gales.verify_gale(res.gale, 6)
    assert report.certain_violations == 0
    assert res.normalization is None
    assert not res.closed_form
    assert [len(res.family.sets[i]) for i in range(1, 5)] == [5, 4, 3, 2]


def test_build_success_transfer():
    res = ct.build_dprime(doubling_source(6), uniform_plan(4, 6))
    for i in range(1, 4):
        w = "0" * (i + 1)
        lo = res.gale.payoff.table[w].lo
        slack = res.gale.budgets[w].hi
        assert lo >= Dyadic(i, 0) - slack
        assert lo > nm.ZERO


def test_build_root_bound():
    res = ct.build_dprime(doubling_source(6), uniform_plan(4, 6))
    root = res.gale.payoff.table[ms.LAMBDA]
    assert root.hi <= res.root_bound.hi + res.budget_core.hi
    assert as_fraction(res.root_bound.lo) > Fraction(5)
    assert as_fraction(res.root_bound.hi) < Fraction(6)


def test_build_budget_scales_with_measure():
    res = ct.build_dprime(doubling_source(6), uniform_plan(4, 6))
    core = res.budget_core
    for w in ("", "0", "01", "0011"):
        denom = nm.pow(ms.Uniform().value(w, 64), THREE_HALVES, 64)
        want_hi = nm.mul(nm.recip(denom, 64), core, 64).hi
        bud = res.gale.budgets[w]
        assert bud.lo == nm.ZERO
        assert bud.hi == want_hi


def test_build_constant_source_is_zero_table():
    src = gales.closed_gale("constant", ms.Uniform(), ONE)
    res = ct.build_dprime(src, uniform_plan(3, 4))
    assert all(len(res.family.sets[i]) == 0 for i in range(1, 4))
    assert all(v == point(0) for v in res.gale.payoff.table.values())
    assert gales.verify_gale(res.gale, 4).certain_violations == 0


def test_build_normalizes_large_root():
    table = {w: nm.scale_pow2(iv, 1) for w, iv in doubling_table(6).items()}
    src = gales.GaleSpec.from_table(table, ONE, gales.GALE, ms.Uniform())
    res = ct.build_dprime(src, uniform_plan(4, 6))
    assert res.normalization == point(1, -1)
    plain = ct.build_dprime(doubling_source(6), uniform_plan(4, 6))
    assert res.family.sets == plain.family.sets


def test_build_staged_monotone_in_stage():
    src = gales.GaleSpec.staged(growing_oracle, ms.Uniform(), ONE)
    plan = uniform_plan(2, 4)
    prev = None
    for r in range(6):
        res = ct.build_dprime(src, plan, stage=r)
        table = res.gale.payoff.table
        if prev is not None:
            for w, iv in table.items():
                assert iv.lo >= prev[w].lo
        prev = table


def test_build_staged_root_unbounded():
    src = gales.GaleSpec.staged(lambda w, r: Dyadic(2, 0), ms.Uniform(), ONE)
    with pytest.raises(RootUnbounded):
        ct.build_dprime(src, uniform_plan(2, 3), stage=1)


def test_build_rejects_unbalanced_measure():
    cert = ms.BalanceCertificate(
        point(1, -2), point(1, 0), DyadicExponent(0), DyadicExponent(2), 64
    )
    plan = ct.ConversionPlan(ONE, THREE_HALVES, cert, 2, 4)
    with pytest.raises(NotWellBalanced):
        ct.build_dprime(doubling_source(4), plan)


def test_build_depth_beyond_table_refused():
    with pytest.raises(DepthExceeded):
        ct.build_dprime(doubling_source(3), uniform_plan(2, 5))


def test_build_threads_bit_identical():
    src = doubling_source(6)
    plan = uniform_plan(4, 6)
    one = ct.build_dprime(src, plan, threads=1)
    four = ct.build_dprime(src, plan, threads=4)
    assert one.gale.payoff.table == four.gale.payoff.table
    assert one.gale.budgets == four.gale.budgets
    assert one.render() == four.render()


def test_uniform_path_agrees_with_general():
    src = doubling_source(5)
    plan = uniform_plan(3, 5)
    general = ct.build_dprime(src, plan)
    closed = ct.build_dprime_uniform(src, plan)
    assert closed.closed_form
    for w in general.gale.payoff.table:
        assert general.gale.payoff.table[w].intersects(closed.gale.payoff.table[w])
    assert gales.verify_gale(closed.gale, 5).certain_violations == 0


def test_uniform_path_requires_uniform_measure():
    nu = ms.Bernoulli(point(1, -2))
    table = {w: point(1) for w in ms.strings_to_depth(3)}
    src = gales.GaleSpec.from_table(table, ONE, gales.SUPERGALE, nu)
    cert = ms.BalanceCertificate.derive(point(3, -2), point(1, 0))
    plan = ct.ConversionPlan(ONE, THREE_HALVES, cert, 2, 3)
    with pytest.raises(ValueError):
        ct.build_dprime_uniform(src, plan)


def test_render_mentions_sets_and_budget():
    res = ct.build_dprime(doubling_source(5), uniform_plan(3, 5))
    text = "\n".join(res.render())
    assert "U_1 members=4" in text
    assert "budget-core" in text
    assert "root-bound" in text
    assert "path=general" in text


# --- plan files ---


PLAN_TEXT = """s 1/2^0
sprime 3/2^1
alpha 1*2^-1
C 1*2^0
max_index 8
max_depth 12
precision 64
"""


def test_plan_round_trip():
    plan = ct.parse_plan(PLAN_TEXT)
    assert plan.s == ONE
    assert plan.sprime == THREE_HALVES
    assert plan.max_index == 8
    assert plan.max_depth == 12
    assert plan.precision == 64
    assert plan.cert.epsilon == DyadicExponent(1)
    assert ct.format_plan(plan) == PLAN_TEXT


def test_plan_parse_missing_key():
    with pytest.raises(ParseError):
        ct.parse_plan("s 1/2^0\nsprime 3/2^1\n")


def test_plan_parse_unknown_key():
    with pytest.raises(ParseError) as exc:
        ct.parse_plan(PLAN_TEXT + "extra 3\n")
    assert exc.value.line == 8


def test_plan_parse_duplicate_key():
    with pytest.raises(ParseError) as exc:
        ct.parse_plan(PLAN_TEXT + "s 1/2^0\n")
    assert exc.value.line == 8


def test_plan_parse_bad_token():
    with pytest.raises(ParseError) as exc:
        ct.parse_plan("s one\n" + PLAN_TEXT.split("\n", 1)[1])
    assert exc.value.line == 1


@settings(max_examples=25)
@given(
    st.integers(min_value=1, max_value=12),
    st.integers(min_value=1, max_value=16),
    st.integers(min_value=1, max_value=7),
)
def test_plan_format_parse_round_trip(max_index, max_depth, sprime_num):
    cert = ms.BalanceCertificate.derive(point(1, -1), point(1, 0))
    plan = ct.ConversionPlan(
        HALF, DyadicExponent(sprime_num, 1) + HALF, cert, max_index, max_depth
    )
    back = ct.parse_plan(ct.format_plan(plan))
    assert back.s == plan.s
    assert back.sprime == plan.sprime
    assert back.max_index == plan.max_index
    assert back.max_depth == plan.max_depth
    assert back.precision == plan.precision
