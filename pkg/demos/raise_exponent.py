"""
Raising a supergale's exponent without losing its successes
===========================================================

A supergale succeeding at exponent s can be traded for a genuine gale
at any s' > s that still succeeds on every sequence the original
visited infinitely often.  The construction collects the level sets
U_i of nodes where the source certainly exceeds 2^i, reopens a payoff
d_{U_i} on each, and mixes them with weights i.  Everything here is
finite and certified: the truncation error is carried as an explicit
per-node budget interval.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from galekit import construct, gales, measures, numerics
from galekit.numerics import Dyadic, DyadicExponent, DyadicInterval

uniform = measures.Uniform()
one = DyadicExponent(1)

# The source: the 0-spine doubling martingale as an exact table,
# d(0^k) = 2^k and zero everywhere off the spine.
table = {}
for w in measures.strings_to_depth(10):
    value = Dyadic(1, len(w)) if "1" not in w else numerics.ZERO
    table[w] = DyadicInterval.point(value)
source = gales.GaleSpec.from_table(table, one, gales.GALE, uniform)

# The plan: raise s = 1 to s' = 3/2, keep level sets up to index 6,
# enumerate to depth 10, and certify balance with alpha = 1/2, C = 1.
cert = measures.BalanceCertificate.derive(
    DyadicInterval.point(Dyadic(1, -1)), DyadicInterval.point(Dyadic(1, 0))
)
plan = construct.ConversionPlan(one, DyadicExponent(3, 1), cert, 6, 10)

result = construct.build_dprime(source, plan)
for line in result.render():
    print(line)

# The output is itself a gale: re-verify it from scratch.
report = gales.verify_gale(result.gale, depth=10)
print()
print(f"re-verified to depth 10: certain violations = {report.certain_violations}")

# Success transfers: where the source reached 2^i, the new gale's value
# is at least i up to the declared budget.
print()
for i in range(1, 5):
    w = "0" * (i + 1)
    enclosure = result.gale.payoff.table[w]
    budget = result.gale.budgets[w]
    print(
        f"d'({w}) >= {numerics.format_dyadic(enclosure.lo)}"
        f" (target {i}, budget up to {numerics.format_dyadic(budget.hi)})"
    )
