"""Exact dyadic arithmetic and outward-rounded interval arithmetic.

Every inexact real in galekit travels as a :class:`DyadicInterval`, a pair
of dyadic rationals bracketing the true value.  The containment contract
is global: for any operation defined here and any points chosen inside
the operand intervals, the exact mathematical result lies inside the
result interval.

Addition, subtraction, and multiplication of dyadics are closed, so those
interval operations are exact unless a precision argument asks for
outward rounding.  Division, reciprocals, square roots, and fractional
powers round outward to ``precision`` significant bits; per primitive the
rounding slack is at most ``2^(1-p)`` relative.

Exponents are restricted to dyadic rationals a/2^k, so x^t reduces to an
exact integer power composed with k bracketing square roots.  Square
roots use bisection with exact integer comparisons, the simplest scheme
whose enclosure is correct by inspection: the invariant lo^2 <= v <= hi^2
is maintained at every step.
"""

from __future__ import annotations

import re

from .errors import DivergentSeries, NegativeBase, ZeroToNegative

DEFAULT_PRECISION = 64


class Dyadic:
    """Exact dyadic rational ``mantissa * 2^exponent``.

    Canonical form: mantissa odd or zero; zero carries exponent 0.
    Instances are immutable by convention and hashable.  Addition,
    subtraction, multiplication, and nonnegative integer powers are
    closed and exact.
    """

    __slots__ = ("man", "exp")

    def __init__(self, mantissa: int, exponent: int = 0):
        if mantissa == 0:
            self.man = 0
            self.exp = 0
        else:
            if mantissa & 1 == 0:
                shift = (mantissa & -mantissa).bit_length() - 1
                mantissa >>= shift
                exponent += shift
            self.man = mantissa
            self.exp = exponent

    @property
    def mantissa(self) -> int:
        return self.man

    @property
    def exponent(self) -> int:
        return self.exp

    def is_zero(self) -> bool:
        return self.man == 0

    def sign(self) -> int:
        return (self.man > 0) - (self.man < 0)

    def _cmp(self, other: "Dyadic") -> int:
        a, b = self, other
        if a.man == 0:
            return -((b.man > 0) - (b.man < 0))
        if b.man == 0:
            return (a.man > 0) - (a.man < 0)
        sa, sb = (a.man > 0) - (a.man < 0), (b.man > 0) - (b.man < 0)
        if sa != sb:
            return sa
        # align to the smaller exponent; shifts are exact
        if a.exp >= b.exp:
            x, y = a.man << (a.exp - b.exp), b.man
        else:
            x, y = a.man, b.man << (b.exp - a.exp)
        return (x > y) - (x < y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.man == other.man and self.exp == other.exp

    def __hash__(self):
        return hash((self.man, self.exp))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.man, self.exp)

    def __abs__(self) -> "Dyadic":
        return Dyadic(abs(self.man), self.exp)

    def __add__(self, other: "Dyadic") -> "Dyadic":
        a, b = self, other
        if a.man == 0:
            return b
        if b.man == 0:
            return a
        e = min(a.exp, b.exp)
        return Dyadic((a.man << (a.exp - e)) + (b.man << (b.exp - e)), e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        return self + (-other)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.man * other.man, self.exp + other.exp)

    def __pow__(self, n: int) -> "Dyadic":
        if n < 0:
            raise ValueError("dyadics are not closed under negative powers")
        if n == 0:
            return ONE
        return Dyadic(self.man ** n, self.exp * n)

    def scaled(self, shift: int) -> "Dyadic":
        """Exact multiplication by 2^shift."""
        if self.man == 0:
            return self
        return Dyadic(self.man, self.exp + shift)

    def to_float(self) -> float:
        """Nearest float, for diagnostics only; never on the trusted path."""
        import math

        try:
            return math.ldexp(self.man, self.exp)
        except OverflowError:
            return float("inf") if self.man > 0 else float("-inf")

    def __repr__(self):
        return f"Dyadic({self.man}, {self.exp})"

    def __str__(self):
        return format_dyadic(self)


ZERO = Dyadic(0)
ONE = Dyadic(1)
TWO = Dyadic(1, 1)


def round_down(x: Dyadic, precision: int) -> Dyadic:
    """Largest dyadic with at most ``precision`` mantissa bits that is <= x."""
    m = x.man
    if m == 0:
        return x
    extra = abs(m).bit_length() - precision
    if extra <= 0:
        return x
    return Dyadic(m >> extra, x.exp + extra)  # arithmetic shift floors


def round_up(x: Dyadic, precision: int) -> Dyadic:
    """Smallest dyadic with at most ``precision`` mantissa bits that is >= x."""
    m = x.man
    if m == 0:
        return x
    extra = abs(m).bit_length() - precision
    if extra <= 0:
        return x
    return Dyadic(-((-m) >> extra), x.exp + extra)


class DyadicExponent:
    """Dyadic-rational exponent ``numerator / 2^log2_denominator``.

    Same value space as :class:`Dyadic` but kept as a separate type for
    the exponent role: powers x^t are only defined for these, reducing to
    integer powers plus ``log2_denominator`` square roots.  Canonical
    form keeps the numerator odd (or zero) whenever the denominator
    exponent is positive.
    """

    __slots__ = ("num", "k")

    def __init__(self, numerator: int, log2_denominator: int = 0):
        if log2_denominator < 0:
            raise ValueError("log2_denominator must be nonnegative")
        if numerator == 0:
            self.num, self.k = 0, 0
        else:
            while log2_denominator > 0 and numerator & 1 == 0:
                numerator >>= 1
                log2_denominator -= 1
            self.num, self.k = numerator, log2_denominator

    @property
    def numerator(self) -> int:
        return self.num

    @property
    def log2_denominator(self) -> int:
        return self.k

    def to_dyadic(self) -> Dyadic:
        return Dyadic(self.num, -self.k)

    @classmethod
    def from_dyadic(cls, d: Dyadic) -> "DyadicExponent":
        if d.exp >= 0:
            return cls(d.man << d.exp, 0)
        return cls(d.man, -d.exp)

    def is_integer(self) -> bool:
        return self.k == 0

    def floor(self) -> int:
        return self.num >> self.k

    def sign(self) -> int:
        return (self.num > 0) - (self.num < 0)

    def _coerce(self, other) -> "DyadicExponent":
        if isinstance(other, DyadicExponent):
            return other
        if isinstance(other, int):
            return DyadicExponent(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        k = max(self.k, o.k)
        return DyadicExponent((self.num << (k - self.k)) + (o.num << (k - o.k)), k)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __neg__(self):
        return DyadicExponent(-self.num, self.k)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return DyadicExponent(self.num * o.num, self.k + o.k)

    __rmul__ = __mul__

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        k = max(self.k, o.k)
        x, y = self.num << (k - self.k), o.num << (k - o.k)
        return (x > y) - (x < y)

    def __eq__(self, other):
        if not isinstance(other, (DyadicExponent, int)):
            return NotImplemented
        return self._cmp(other) == 0

    def __hash__(self):
        return hash((self.num, self.k))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __repr__(self):
        return f"DyadicExponent({self.num}, {self.k})"

    def __str__(self):
        return format_exponent(self)


class DyadicInterval:
    """Closed interval [lo, hi] of dyadic rationals, lo <= hi."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Dyadic, hi: Dyadic):
        if lo > hi:
            raise ValueError(f"inverted interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, d: Dyadic) -> "DyadicInterval":
        return cls(d, d)

    @classmethod
    def from_int(cls, n: int) -> "DyadicInterval":
        d = Dyadic(n)
        return cls(d, d)

    def width(self) -> Dyadic:
        return self.hi - self.lo

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, d: Dyadic) -> bool:
        return self.lo <= d <= self.hi

    def contains_interval(self, other: "DyadicInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "DyadicInterval") -> bool:
        return not (self.hi < other.lo or other.hi < self.lo)

    def __eq__(self, other):
        if not isinstance(other, DyadicInterval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"DyadicInterval({self.lo!r}, {self.hi!r})"

    def __str__(self):
        return format_interval(self)


IV_ZERO = DyadicInterval.point(ZERO)
IV_ONE = DyadicInterval.point(ONE)


def _outward(lo: Dyadic, hi: Dyadic, precision: int | None) -> DyadicInterval:
    if precision is None:
        return DyadicInterval(lo, hi)
    return DyadicInterval(round_down(lo, precision), round_up(hi, precision))


def add(a: DyadicInterval, b: DyadicInterval, precision: int | None = None) -> DyadicInterval:
    """Interval sum; exact unless ``precision`` requests outward rounding."""
    return _outward(a.lo + b.lo, a.hi + b.hi, precision)


def sub(a: DyadicInterval, b: DyadicInterval, precision: int | None = None) -> DyadicInterval:
    return _outward(a.lo - b.hi, a.hi - b.lo, precision)


def mul(a: DyadicInterval, b: DyadicInterval, precision: int | None = None) -> DyadicInterval:
    """Interval product via endpoint products with sign-case selection."""
    cands = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    lo = hi = cands[0]
    for c in cands[1:]:
        if c < lo:
            lo = c
        elif c > hi:
            hi = c
    return _outward(lo, hi, precision)


def neg(a: DyadicInterval) -> DyadicInterval:
    return DyadicInterval(-a.hi, -a.lo)


def scale_pow2(a: DyadicInterval, shift: int) -> DyadicInterval:
    """Exact multiplication by 2^shift."""
    return DyadicInterval(a.lo.scaled(shift), a.hi.scaled(shift))


def _recip_point(v: Dyadic, precision: int, up: bool) -> Dyadic:
    """Directed dyadic bound on 1/v for nonzero v."""
    s = v.sign()
    m = abs(v.man)
    if m == 1:
        return Dyadic(s, -v.exp)
    q = precision + m.bit_length() + 2
    n, rem = divmod(1 << q, m)
    exact = rem == 0
    # toward +inf wants the larger value, toward -inf the smaller
    if s > 0:
        mag = n + (0 if exact or not up else 1)
        res = Dyadic(mag, -q - v.exp)
    else:
        mag = n + (0 if exact or up else 1)
        res = Dyadic(-mag, -q - v.exp)
    return round_up(res, precision) if up else round_down(res, precision)


def _div_point(x: Dyadic, y: Dyadic, precision: int, up: bool) -> Dyadic:
    """Directed dyadic bound on x/y for nonzero y."""
    if x.man == 0:
        return ZERO
    s = x.sign() * y.sign()
    mx, my = abs(x.man), abs(y.man)
    q = precision + my.bit_length() + 2
    n, rem = divmod(mx << q, my)
    exact = rem == 0
    if s > 0:
        mag = n + (0 if exact or not up else 1)
        res = Dyadic(mag, x.exp - y.exp - q)
    else:
        mag = n + (0 if exact or up else 1)
        res = Dyadic(-mag, x.exp - y.exp - q)
    return round_up(res, precision) if up else round_down(res, precision)


def div(a: DyadicInterval, b: DyadicInterval, precision: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Interval quotient; b must not contain zero."""
    if b.lo <= ZERO <= b.hi:
        raise ZeroDivisionError("interval divisor contains zero")
    lo = min(
        _div_point(a.lo, b.lo, precision, False),
        _div_point(a.lo, b.hi, precision, False),
        _div_point(a.hi, b.lo, precision, False),
        _div_point(a.hi, b.hi, precision, False),
    )
    hi = max(
        _div_point(a.lo, b.lo, precision, True),
        _div_point(a.lo, b.hi, precision, True),
        _div_point(a.hi, b.lo, precision, True),
        _div_point(a.hi, b.hi, precision, True),
    )
    return DyadicInterval(lo, hi)


def recip(b: DyadicInterval, precision: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Interval reciprocal; b must not contain zero."""
    if b.lo <= ZERO <= b.hi:
        raise ZeroDivisionError("interval reciprocal of interval containing zero")
    return DyadicInterval(_recip_point(b.hi, precision, False), _recip_point(b.lo, precision, True))


def _sqrt_point(v: Dyadic, precision: int, up: bool) -> Dyadic:
    """Directed dyadic bound on sqrt(v), v >= 0.

    Bisection keeping lo^2 <= v <= hi^2, starting from the power-of-two
    bracket [2^g, 2^(g+1)] where 2^g <= sqrt(v) < 2^(g+1).  Both
    endpoints lie on every dyadic grid 2^(g-j), so each midpoint stays
    on an absolute grid, and the result is exactly the floor (or
    ceiling) of sqrt(v) on the final grid 2^(g - precision - 2).  That
    grid alignment is what makes enclosures from chained square roots
    shrink monotonically as precision grows; it also bounds the relative
    slack by 2^-(precision+2) per call.  The step count is precision+2,
    independent of the magnitude of v, so exponents of astronomical size
    cost the same as unit ones.
    """
    if v.man < 0:
        raise NegativeBase("square root of a negative dyadic")
    if v.man == 0:
        return ZERO
    if v.man == 1 and v.exp % 2 == 0:
        return Dyadic(1, v.exp // 2)
    bl = v.man.bit_length()
    g = (v.exp + bl - 1) >> 1  # 2^g <= sqrt(v) < 2^(g+1)
    lo, hi = Dyadic(1, g), Dyadic(1, g + 1)
    for _ in range(precision + 2):
        m = lo + hi
        mid = Dyadic(m.man, m.exp - 1)
        c = (mid * mid)._cmp(v)
        if c == 0:
            return mid
        if c < 0:
            lo = mid
        else:
            hi = mid
    return hi if up else lo


_POW_CACHE: dict = {}
_POW2_FRAC_CACHE: dict = {}
_POW_CACHE_LIMIT = 1 << 20


def clear_caches() -> None:
    _POW_CACHE.clear()
    _POW2_FRAC_CACHE.clear()


def _pow2_frac(f: DyadicExponent, precision: int, up: bool) -> Dyadic:
    """Directed bound on 2^f for 0 < f < 1, via a square-root chain."""
    key = (f.num, f.k, precision, up)
    hit = _POW2_FRAC_CACHE.get(key)
    if hit is not None:
        return hit
    u = Dyadic(1, f.num)
    for _ in range(f.k):
        u = _sqrt_point(u, precision + 4, up)
    res = round_up(u, precision) if up else round_down(u, precision)
    _POW2_FRAC_CACHE[key] = res
    return res


def _ipow_point(v: Dyadic, a: int, wp: int, up: bool) -> Dyadic:
    """Directed bound on v^a (v > 0, a >= 1) by square and multiply.

    Each intermediate product is rounded in the requested direction at
    wp bits, so the result brackets the true power from the chosen side;
    roughly 2*log2(a) roundings cost at most 4*log2(a)*2^-wp relative.
    Rounded products of same-direction bounds are monotone in both the
    argument and wp, so enclosures built from this path still shrink as
    precision grows.
    """
    rnd = round_up if up else round_down
    res = None
    sq = v
    while True:
        if a & 1:
            res = sq if res is None else rnd(res * sq, wp)
        a >>= 1
        if not a:
            return res
        sq = rnd(sq * sq, wp)


def _pow_point(v: Dyadic, t: DyadicExponent, precision: int, up: bool) -> Dyadic:
    """Directed dyadic bound on v^t for v >= 0 (v > 0 when t < 0)."""
    if t.num == 0:
        return ONE
    if v.man == 0:
        return ZERO
    key = (v.man, v.exp, t.num, t.k, precision, up)
    hit = _POW_CACHE.get(key)
    if hit is not None:
        return hit
    if len(_POW_CACHE) > _POW_CACHE_LIMIT:
        _POW_CACHE.clear()
    a, k = t.num, t.k
    if a < 0:
        r = _pow_point(v, -t, precision + 4, not up)
        res = _recip_point(r, precision, up)
    elif v.man == 1:
        # exact power of two: 2^(e*a/2^k), split off the integer part
        q = DyadicExponent(v.exp * a, k)
        n = q.floor()
        frac = q - n
        if frac.num == 0:
            res = Dyadic(1, n)
        else:
            res = _pow2_frac(frac, precision, up).scaled(n)
            res = round_up(res, precision) if up else round_down(res, precision)
    else:
        if a > 64:
            u = _ipow_point(v, a, precision + a.bit_length() + 12, up)
        else:
            base = v
            if a > 1:
                # keep the exact power bounded; rounding in the base keeps
                # the direction valid since x^a is monotone for x >= 0
                budget = precision + 2 * k + 8
                if abs(base.man).bit_length() * a > 4 * budget:
                    base = round_up(base, budget) if up else round_down(base, budget)
            u = base ** a
        for _ in range(k):
            u = _sqrt_point(u, precision + 4, up)
        res = round_up(u, precision) if up else round_down(u, precision)
    _POW_CACHE[key] = res
    return res


def _pow_int(x: DyadicInterval, n: int, precision: int | None) -> DyadicInterval:
    if n == 0:
        return IV_ONE
    if n > 0:
        if n % 2 == 1 or x.lo >= ZERO:
            return _outward(x.lo ** n, x.hi ** n, precision)
        if x.hi <= ZERO:
            return _outward(x.hi ** n, x.lo ** n, precision)
        m = max(abs(x.lo), abs(x.hi))
        return _outward(ZERO, m ** n, precision)
    # negative integer power
    if x.lo <= ZERO <= x.hi:
        raise ZeroToNegative("negative power of an interval containing zero")
    y = _pow_int(x, -n, None)
    p = precision if precision is not None else DEFAULT_PRECISION
    return DyadicInterval(_recip_point(y.hi, p, False), _recip_point(y.lo, p, True))


def pow(x: DyadicInterval, t: DyadicExponent, precision: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Enclosure of x^t for a dyadic exponent t = a/2^k.

    Integer exponents use exact endpoint powers with sign-case analysis.
    Fractional exponents require x.lo >= 0 and compose an exact integer
    power with k bracketing square roots; the enclosure tightens as
    ``precision`` grows and never widens.
    """
    if precision < 4:
        raise ValueError("pow precision must be at least 4")
    if t.num == 0:
        return IV_ONE
    if t.k == 0:
        return _pow_int(x, t.num, precision)
    if x.lo < ZERO:
        raise NegativeBase("fractional power of an interval reaching below zero")
    if t.num < 0:
        if x.lo.man == 0:
            raise ZeroToNegative("negative power of an interval containing zero")
        return DyadicInterval(
            _pow_point(x.hi, t, precision, False), _pow_point(x.lo, t, precision, True)
        )
    return DyadicInterval(
        _pow_point(x.lo, t, precision, False), _pow_point(x.hi, t, precision, True)
    )


def pow2(q: DyadicExponent, precision: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Enclosure of 2^q; exact singleton when q is an integer."""
    if q.k == 0:
        return DyadicInterval.point(Dyadic(1, q.num))
    return pow(DyadicInterval.point(TWO), q, precision)


def geometric_tail(
    ratio: DyadicInterval, scale: DyadicInterval, precision: int = DEFAULT_PRECISION
) -> DyadicInterval:
    """Enclosure of scale / (1 - ratio), the closed geometric series bound.

    Requires 0 <= ratio and ratio.hi < 1; a ratio whose upper end reaches
    1 has no finite sum and raises :class:`DivergentSeries`.
    """
    if ratio.lo < ZERO:
        raise ValueError("geometric ratio must be nonnegative")
    if ratio.hi >= ONE:
        raise DivergentSeries(f"geometric ratio {ratio} reaches 1")
    denom = sub(IV_ONE, ratio)
    return div(scale, denom, precision)


def sum_intervals(items, precision: int | None = None) -> DyadicInterval:
    """Left fold of interval addition starting from [0, 0].

    Callers are responsible for presenting terms in the canonical order
    (ascending length, then lexicographic, for string-indexed sums) so
    results are bit-reproducible.
    """
    total = IV_ZERO
    for item in items:
        total = add(total, item, precision)
    return total


# serialization: dyadics as m*2^e, exponents as a/2^k, intervals as [lo,hi]

_DYADIC_RE = re.compile(r"^([+-]?\d+)\*2\^([+-]?\d+)$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_EXPONENT_RE = re.compile(r"^([+-]?\d+)/2\^(\d+)$")


def format_dyadic(d: Dyadic) -> str:
    return f"{d.man}*2^{d.exp}"


def parse_dyadic(token: str) -> Dyadic:
    m = _DYADIC_RE.match(token)
    if m:
        return Dyadic(int(m.group(1)), int(m.group(2)))
    if _INT_RE.match(token):
        return Dyadic(int(token))
    raise ValueError(f"malformed dyadic token {token!r}")


def format_exponent(t: DyadicExponent) -> str:
    return f"{t.num}/2^{t.k}"


def parse_exponent(token: str) -> DyadicExponent:
    m = _EXPONENT_RE.match(token)
    if m:
        return DyadicExponent(int(m.group(1)), int(m.group(2)))
    if _INT_RE.match(token):
        return DyadicExponent(int(token))
    raise ValueError(f"malformed exponent token {token!r}")


def format_interval(iv: DyadicInterval) -> str:
    return f"[{format_dyadic(iv.lo)},{format_dyadic(iv.hi)}]"


def parse_interval(token: str) -> DyadicInterval:
    if not (token.startswith("[") and token.endswith("]")):
        raise ValueError(f"malformed interval token {token!r}")
    body = token[1:-1]
    parts = body.split(",")
    if len(parts) != 2:
        raise ValueError(f"malformed interval token {token!r}")
    return DyadicInterval(parse_dyadic(parts[0].strip()), parse_dyadic(parts[1].strip()))
