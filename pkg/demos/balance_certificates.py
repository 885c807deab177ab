"""
Which measures decay fast enough to support the conversion?
===========================================================

The exponent-raising construction needs the measure to be well
balanced: nu(w) <= C * alpha^|w| for some alpha < 1.  Certificates are
pairs of dyadic exponents (c, epsilon) with C <= 2^c and alpha <= 2^-eps
so the geometric tail bounds stay in closed form.  This script derives
certificates for decaying measures and watches a polynomially decaying
one fail.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"))

from galekit import measures, numerics
from galekit.numerics import Dyadic, DyadicExponent, DyadicInterval

point = DyadicInterval.point

# The uniform measure halves at every step: alpha = 1/2 with C = 1,
# which derives the exact exponents c = 0 and epsilon = 1.
uni = measures.Uniform()
cert = measures.suggest_balance(uni, depth=12)
for line in cert.describe():
    print(line)
report = measures.check_balance(uni, cert, depth=12)
print(report.render()[0])
print()

# Bernoulli(1/4): the heaviest branch keeps 3/4 of the mass, so the
# observed decay root sits near 3/4 and epsilon lands below 1/2.
bern = measures.Bernoulli(point(Dyadic(1, -2)))
cert = measures.suggest_balance(bern, depth=10)
for line in cert.describe():
    print(line)
print()

# A harmonically decaying node table: mass 1/(k+1) along the zero
# spine.  That is slower than every exponential, so the uniform-style
# certificate (1/2, 1) is refused with concrete witnesses.
table = {"": point(Dyadic(1, 0))}
for k in range(6):
    spine = "0" * k
    table[spine + "0"] = numerics.div(numerics.IV_ONE, point(Dyadic(k + 2, 0)))
    table[spine + "1"] = numerics.div(
        numerics.IV_ONE, point(Dyadic((k + 1) * (k + 2), 0))
    )
for w in measures.strings_to_depth(6):
    if "1" in w and w not in table:
        table[w] = numerics.scale_pow2(table[w[:-1]], -1)
harmonic = measures.NodeTable(table)

half_cert = measures.BalanceCertificate.derive(point(Dyadic(1, -1)), point(Dyadic(1, 0)))
report = measures.check_balance(harmonic, half_cert, depth=6)
print(f"harmonic spine vs (1/2, 1): {report.render()[0]}")
for violation in report.violations[:3]:
    print(" ", violation.render())

# The scaled trace makes the failure vivid: multiplied by 2^|w|, the
# harmonic spine grows without bound, witnessing exactly the mass that
# an (alpha = 1/2) certificate would need to push down.
trace = measures.weak_balance_trace(harmonic, DyadicExponent(1), depth=6)
print()
for line in trace.render():
    print(line)
