import random
from fractions import Fraction

import pytest

from hcmu_lab.errors import FormatError
from hcmu_lab.ratpoly import (
    RationalFunction,
    RationalPoly,
    count_roots_between,
    isolate_roots,
    poly_from_line,
    poly_gcd,
    poly_to_line,
    sign_variations,
    squarefree_part,
    sturm_sequence,
)

F = Fraction
P = RationalPoly


def test_construction_strips_trailing_zeros():
    assert P((1, 2, 0, 0)).coeffs == (F(1), F(2))
    assert P(()).is_zero()
    assert P((0, 0)).degree == -1


def test_arithmetic_basics():
    p = P((1, 2))            # 1 + 2K
    q = P((F(-1, 3), 0, 1))  # -1/3 + K^2
    assert (p + q).coeffs == (F(2, 3), F(2), F(1))
    assert (p - p).is_zero()
    assert (p * q)(F(2)) == p(F(2)) * q(F(2))
    assert (p ** 3)(F(1, 2)) == p(F(1, 2)) ** 3
    assert (2 * p).coeffs == (F(2), F(4))


def test_divmod_inverts_multiplication():
    rng = random.Random(11)
    for _ in range(25):
        a = P([F(rng.randint(-9, 9), rng.randint(1, 4))
               for _ in range(rng.randint(1, 6))])
        b = P([F(rng.randint(-9, 9), rng.randint(1, 4))
               for _ in range(rng.randint(1, 5))])
        if b.is_zero():
            continue
        q, r = divmod(a, b)
        assert q * b + r == a
        assert r.is_zero() or r.degree < b.degree


def test_division_by_zero_poly():
    with pytest.raises(ZeroDivisionError):
        divmod(P((1,)), P(()))


def test_gcd_and_squarefree():
    p = P.from_roots((1, 1, 2))
    g = poly_gcd(p, p.derivative())
    assert g == P.from_roots((1,))  # monic K - 1
    assert squarefree_part(p) == P.from_roots((1, 2))


def test_exact_evaluation_and_derivative():
    p = P((F(1, 7), 0, F(-3, 2), 1))
    assert p.derivative().coeffs == (F(0), F(-3), F(3))
    assert p(F(3, 2)) == F(1, 7) - F(3, 2) * F(9, 4) + F(27, 8)


def test_sturm_counts_on_a_known_cubic():
    # -(56/3) K^3 + 8: single real root (3/7)^(1/3) ~ 0.7539
    phi = P((8, 0, 0, F(-56, 3)))
    assert count_roots_between(phi, 1, 2) == 0
    assert count_roots_between(phi, 0, 1) == 1
    assert count_roots_between(phi, F(-10), F(10)) == 1


def test_sturm_endpoint_roots_are_excluded():
    p = P.from_roots((1, 2, 3))
    assert count_roots_between(p, 1, 3) == 1       # only K = 2 inside
    assert count_roots_between(p, 1, 2) == 0
    assert count_roots_between(p, F(1, 2), F(7, 2)) == 3


def test_isolation_separates_all_roots():
    p = P.from_roots((F(-1, 2), F(1, 3), F(1, 2), 4), lead=F(-2, 7))
    boxes = isolate_roots(p, -1, 5)
    assert len(boxes) == 4
    roots = sorted([F(-1, 2), F(1, 3), F(1, 2), F(4)])
    for (lo, hi), r in zip(boxes, roots):
        assert lo <= r <= hi
        assert lo == hi == r or count_roots_between(p, lo, hi) == 1
    # disjoint
    for (a, b), (c, d) in zip(boxes, boxes[1:]):
        assert b <= c


def test_isolation_hits_exact_rational_roots():
    p = P.from_roots((F(1, 2), F(1, 2) + F(1, 10 ** 6)))
    boxes = isolate_roots(p, 0, 1)
    assert len(boxes) == 2


def test_sign_variations_ignores_zeros():
    chain = sturm_sequence(P.from_roots((0, 1)))
    assert sign_variations(chain, F(0)) - sign_variations(chain, F(2)) == 1


def test_serialization_roundtrip_and_layout():
    phi = P((8, 0, 0, F(-56, 3)))
    line = poly_to_line(phi)
    assert line == "-56/3 0 0 8"
    assert poly_from_line(line) == phi
    assert poly_to_line(P(())) == "0"
    with pytest.raises(FormatError):
        poly_from_line("1/0 2")


def test_rational_function_canonical_form():
    num = P.from_roots((1, 2)) * 3
    den = P.from_roots((2, 5)) * 6
    rf = RationalFunction(num, den)
    assert rf.den.leading == 1
    assert poly_gcd(rf.num, rf.den).degree <= 0
    assert rf == RationalFunction(P.from_roots((1,)) * F(1, 2), P.from_roots((5,)))


def test_rational_function_arithmetic_matches_evaluation():
    rng = random.Random(3)
    pts = [F(7, 3), F(-2), F(1, 9)]
    for _ in range(20):
        mk = lambda: RationalFunction(
            P([rng.randint(-5, 5) for _ in range(rng.randint(1, 4))]),
            P([rng.randint(-5, 5) for _ in range(rng.randint(1, 3))] + [1]),
        )
        f, g = mk(), mk()
        for op in ("__add__", "__sub__", "__mul__"):
            hfun = getattr(f, op)(g)
            for x in pts:
                try:
                    lhs = hfun(x)
                    rhs = getattr(f(x), op)(g(x))
                except ZeroDivisionError:
                    continue
                assert lhs == rhs


def test_rational_function_derivative_quotient_rule():
    f = RationalFunction(P((0, 1)), P((1, 0, 1)))  # K / (1 + K^2)
    df = f.derivative()
    # (1 - K^2) / (1 + K^2)^2
    expect = RationalFunction(P((1, 0, -1)), P((1, 0, 1)) ** 2)
    assert df == expect
