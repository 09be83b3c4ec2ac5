"""Exact univariate polynomial and rational-function arithmetic over Q.

Everything is built on fractions.Fraction; no floating point enters any
arithmetic path in this module.  Polynomials are coefficient tuples indexed
by degree.  Rational functions are kept in reduced canonical form (numerator
and denominator coprime, denominator monic) so equality is decidable by
comparing components.

Root counting and isolation use Sturm sequences, evaluated exactly at
rational points; isolation refines by rational bisection until every
interval holds exactly one distinct real root.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .errors import FormatError

Rat = Fraction


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int) or isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"not an exact rational: {v!r}")


class RationalPoly:
    """Univariate polynomial with exact rational coefficients.

    ``coeffs[k]`` is the coefficient of ``K**k``.  Trailing zeros are
    stripped; the zero polynomial has ``coeffs == ()`` and degree -1.
    Instances are immutable by convention and hashable.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "RationalPoly":
        return cls(())

    @classmethod
    def one(cls) -> "RationalPoly":
        return cls((1,))

    @classmethod
    def x(cls) -> "RationalPoly":
        return cls((0, 1))

    @classmethod
    def constant(cls, c) -> "RationalPoly":
        return cls((as_fraction(c),))

    @classmethod
    def from_roots(cls, roots, lead=1) -> "RationalPoly":
        p = cls.constant(lead)
        for r in roots:
            p = p * cls((-as_fraction(r), 1))
        return p

    # -- structure ---------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> Fraction:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalPoly):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self == RationalPoly.constant(other)
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"RationalPoly({list(self.coeffs)!r})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return RationalPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return RationalPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = as_fraction(other)
            return RationalPoly(tuple(c * a for a in self.coeffs))
        if not isinstance(other, RationalPoly):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return RationalPoly.zero()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return RationalPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = RationalPoly.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __divmod__(self, other: "RationalPoly"):
        if not isinstance(other, RationalPoly):
            other = _coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero polynomial")
        q = [Fraction(0)] * max(len(self.coeffs) - len(other.coeffs) + 1, 0)
        rem = list(self.coeffs)
        dlead = other.leading
        dn = other.degree
        while len(rem) - 1 >= dn and any(c != 0 for c in rem):
            while rem and rem[-1] == 0:
                rem.pop()
            if len(rem) - 1 < dn:
                break
            k = len(rem) - 1 - dn
            f = rem[-1] / dlead
            q[k] = f
            for i, c in enumerate(other.coeffs):
                rem[k + i] -= f * c
            rem.pop()
        return RationalPoly(q), RationalPoly(rem)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    # -- calculus / evaluation -----------------------------------------------

    def derivative(self) -> "RationalPoly":
        return RationalPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def __call__(self, x):
        """Exact Horner evaluation; result type follows the coefficients and x."""
        acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        if isinstance(x, (int, Fraction)):
            x = as_fraction(x)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    def monic(self) -> "RationalPoly":
        if self.is_zero():
            return self
        inv = 1 / self.leading
        return self * inv


def _coerce(v):
    if isinstance(v, RationalPoly):
        return v
    if isinstance(v, (int, Fraction)):
        return RationalPoly.constant(v)
    return None


def poly_gcd(a: RationalPoly, b: RationalPoly) -> RationalPoly:
    """Monic gcd over Q by the Euclidean algorithm."""
    while not b.is_zero():
        a, b = b, a % b
    if a.is_zero():
        return a
    return a.monic()


def squarefree_part(p: RationalPoly) -> RationalPoly:
    if p.is_zero():
        return p
    g = poly_gcd(p, p.derivative())
    if g.degree <= 0:
        return p
    return p // g


def sturm_sequence(p: RationalPoly) -> list[RationalPoly]:
    """Canonical Sturm chain of the square-free part of p."""
    f = squarefree_part(p)
    chain = [f, f.derivative()]
    while not chain[-1].is_zero() and chain[-1].degree > 0:
        chain.append(-(chain[-2] % chain[-1]))
    if chain[-1].is_zero():
        chain.pop()
    return chain


def sign_variations(chain: list[RationalPoly], x: Fraction) -> int:
    signs = []
    for f in chain:
        v = f(as_fraction(x))
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _strip_endpoint_roots(p: RationalPoly, a: Fraction, b: Fraction) -> RationalPoly:
    # Dividing out exact endpoint roots keeps the Sturm preconditions
    # (nonvanishing at both ends) without perturbing the open interval count.
    for pt in (a, b):
        lin = RationalPoly((-pt, 1))
        while not p.is_zero() and p(pt) == 0:
            p = p // lin
    return p


def count_roots_between(p: RationalPoly, a, b) -> int:
    """Number of distinct real roots of p in the open interval (a, b)."""
    a, b = as_fraction(a), as_fraction(b)
    if not a < b:
        raise ValueError("need a < b")
    if p.is_zero():
        raise ValueError("zero polynomial has no root count")
    p = _strip_endpoint_roots(squarefree_part(p), a, b)
    if p.degree <= 0:
        return 0
    chain = sturm_sequence(p)
    return sign_variations(chain, a) - sign_variations(chain, b)


def isolate_roots(p: RationalPoly, a, b) -> list[tuple[Fraction, Fraction]]:
    """Disjoint rational intervals in (a, b), each holding one distinct root.

    Exact rational roots are returned as degenerate pairs (r, r).  Intervals
    are sorted left to right.
    """
    a, b = as_fraction(a), as_fraction(b)
    if p.is_zero():
        raise ValueError("cannot isolate roots of the zero polynomial")
    work = _strip_endpoint_roots(squarefree_part(p), a, b)
    found: list[tuple[Fraction, Fraction]] = []

    def recurse(f: RationalPoly, lo: Fraction, hi: Fraction):
        n = count_roots_between(f, lo, hi)
        if n == 0:
            return
        if n == 1:
            found.append((lo, hi))
            return
        mid = (lo + hi) / 2
        if f(mid) == 0:
            found.append((mid, mid))
            f = f // RationalPoly((-mid, 1))
        recurse(f, lo, mid)
        recurse(f, mid, hi)

    if work.degree > 0:
        recurse(work, a, b)
    found.sort(key=lambda iv: iv[0])
    return found


# -- serialization -----------------------------------------------------------


def poly_to_line(p: RationalPoly) -> str:
    """Space-separated exact rationals, degree-descending; zero -> "0"."""
    if p.is_zero():
        return "0"
    return " ".join(str(c) for c in reversed(p.coeffs))


def poly_from_line(line: str) -> RationalPoly:
    parts = line.split()
    if not parts:
        raise FormatError("empty polynomial line")
    try:
        cs = [Fraction(tok) for tok in parts]
    except (ValueError, ZeroDivisionError) as e:
        raise FormatError(f"bad rational in polynomial line: {e}") from None
    return RationalPoly(reversed(cs))


class RationalFunction:
    """Quotient of two RationalPoly in reduced form with monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, RationalPoly) else RationalPoly.constant(num)
        den = (
            RationalPoly.one()
            if den is None
            else den
            if isinstance(den, RationalPoly)
            else RationalPoly.constant(den)
        )
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero():
            self.num, self.den = RationalPoly.zero(), RationalPoly.one()
            return
        g = poly_gcd(num, den)
        if g.degree > 0:
            num, den = num // g, den // g
        lead = den.leading
        if lead != 1:
            inv = 1 / lead
            num, den = num * inv, den * inv
        self.num, self.den = num, den

    @classmethod
    def zero(cls):
        return cls(RationalPoly.zero())

    @classmethod
    def one(cls):
        return cls(RationalPoly.one())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den == RationalPoly.one()

    def as_polynomial(self) -> RationalPoly:
        if not self.is_polynomial():
            raise ValueError("rational function is not a polynomial")
        return self.num

    def __eq__(self, other):
        if isinstance(other, RationalFunction):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction, RationalPoly)):
            return self == RationalFunction(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RationalFunction({self.num!r}, {self.den!r})"

    def __add__(self, other):
        other = _coerce_rf(other)
        if other is None:
            return NotImplemented
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        other = _coerce_rf(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce_rf(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce_rf(other)
        if other is None:
            return NotImplemented
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce_rf(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = _coerce_rf(other)
        if other is None:
            return NotImplemented
        return other / self

    def derivative(self) -> "RationalFunction":
        n, d = self.num, self.den
        return RationalFunction(
            n.derivative() * d - n * d.derivative(), d * d
        )

    def __call__(self, x):
        dv = self.den(x)
        if dv == 0:
            raise ZeroDivisionError(f"pole of rational function at {x}")
        return self.num(x) / dv


def _coerce_rf(v):
    if isinstance(v, RationalFunction):
        return v
    if isinstance(v, (int, Fraction, RationalPoly)):
        return RationalFunction(v)
    return None
