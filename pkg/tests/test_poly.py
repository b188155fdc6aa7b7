import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polylabel.poly import (
    Polynomial,
    PolyExpr,
    Sign,
    format_rat,
    gradient_split,
    pair_variables,
    parse_rat,
    rational_sqrt,
    rational_sqrt_upper,
    sign_of,
    to_rat,
)

rats = st.fractions(min_value=-20, max_value=20, max_denominator=50)


def disk_poly():
    x, y = pair_variables(3)
    return (x[0] - y[0]) ** 2 + (x[1] - y[1]) ** 2 - (x[2] + y[2]) ** 2


def poly_strategy(nv, max_deg=3, max_terms=6):
    exps = st.lists(st.integers(0, max_deg), min_size=nv, max_size=nv).filter(lambda e: sum(e) <= max_deg)
    return st.lists(st.tuples(exps, rats), max_size=max_terms).map(lambda ts: Polynomial(nv, ts))


def test_eval_examples():
    x, y = pair_variables(1)
    assert (y[0] - x[0]).eval([0, 0]) == 0
    assert disk_poly().eval([0, 0, 1, 3, 0, 1]) == 5
    assert Polynomial.zero(4).eval([1, 2, 3, 4]) == 0


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        disk_poly().eval([0, 0, 1])


def test_sign_of_examples():
    assert sign_of(5) == Sign.PLUS
    assert sign_of(Fraction(-1, 3)) == Sign.MINUS
    assert sign_of(0) == Sign.ZERO


def test_gradient_split_examples():
    x, y = pair_variables(1)
    assert gradient_split(y[0] - x[0], [2], [7]) == ((-1,), (1,))
    ga, gb = gradient_split(disk_poly(), [0, 0, 1], [2, 0, 1])
    assert ga == (-4, 0, -4) and gb == (4, 0, -4)
    c = Polynomial.constant(4, 5)
    assert gradient_split(c, [1, 2], [3, 4]) == ((0, 0), (0, 0))
    with pytest.raises(ValueError):
        gradient_split(disk_poly(), [0, 0], [1, 1])


def test_zero_polynomial_flagged():
    z = Polynomial.zero(2)
    assert z.is_zero and z.degree() == -1
    assert Polynomial.constant(2, 3).degree() == 0


def test_floats_refused():
    with pytest.raises(TypeError):
        to_rat(0.5)
    with pytest.raises(TypeError):
        Polynomial(1, {(1,): 0.5})


@given(poly_strategy(3), poly_strategy(3), st.lists(rats, min_size=3, max_size=3))
@settings(max_examples=150, deadline=None)
def test_ring_homomorphism(P, Q, p):
    assert (P + Q).eval(p) == P.eval(p) + Q.eval(p)
    assert (P * Q).eval(p) == P.eval(p) * Q.eval(p)
    assert (P - Q).eval(p) == P.eval(p) - Q.eval(p)


@given(poly_strategy(3), rats.filter(lambda c: c != 0), st.lists(rats, min_size=3, max_size=3))
@settings(max_examples=150, deadline=None)
def test_scaling_sign(P, c, p):
    s = sign_of(P.eval(p))
    got = sign_of((P * c).eval(p))
    assert got == (s if c > 0 else -s)


@given(poly_strategy(4, max_deg=4))
@settings(max_examples=100, deadline=None)
def test_serialization_round_trip(P):
    text = json.dumps(P.to_json())
    assert Polynomial.from_json(4, json.loads(text)) == P


def test_rat_format_round_trip():
    for q in (Fraction(0), Fraction(-7, 3), Fraction(12)):
        assert parse_rat(format_rat(q)) == q
    assert format_rat(Fraction(3)) == "3/1"
    with pytest.raises(ValueError):
        parse_rat("1.5")
    with pytest.raises(ValueError):
        parse_rat("1/0")


@given(poly_strategy(2), st.lists(rats, min_size=2, max_size=2), st.lists(rats, min_size=2, max_size=2), rats)
@settings(max_examples=100, deadline=None)
def test_restrict_line(P, base, direction, t):
    coeffs = P.restrict_line(base, direction)
    val = sum(c * t ** i for i, c in enumerate(coeffs))
    assert val == P.eval([b + t * d for b, d in zip(base, direction)])


@given(poly_strategy(2), st.lists(st.tuples(rats, rats), min_size=2, max_size=2), st.data())
@settings(max_examples=100, deadline=None)
def test_interval_encloses(P, sides, data):
    box = [(min(a, b), max(a, b)) for a, b in sides]
    lo, hi = P.eval_interval(box)
    pt = [data.draw(st.fractions(min_value=l, max_value=h)) for l, h in box]
    assert lo <= P.eval(pt) <= hi


def test_compose_and_fix():
    x, y = Polynomial.variables(2)
    P = x * x + 3 * y
    Q = P.compose([y + 1, x])
    assert Q.eval([2, 5]) == P.eval([6, 2])
    assert P.fix({0: 2}).eval([99, 1]) == 7


def test_rational_sqrt():
    assert rational_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert rational_sqrt(Fraction(2)) is None
    r = rational_sqrt_upper(Fraction(2))
    assert r * r >= 2 and r - Fraction(2**20 * 1414213, 10**6 * 2**20) < Fraction(1, 1000)


def test_polyexpr_matches_expansion():
    vs = PolyExpr.variables(3)
    e = (vs[0] + 2 * vs[1]) ** 3 * (vs[2] - 1) - vs[0] * vs[1]
    P = e.expand()
    rng = random.Random(0)
    for _ in range(20):
        p = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3)]
        assert e.eval(p) == P.eval(p)
        assert e.gradient(p) == P.gradient(p)
        assert abs(e.eval_float([float(x) for x in p]) - float(P.eval(p))) < 1e-6
    assert e.degree() == P.degree() == 4
    assert e.degree_in([2]) == 1
    box = [(Fraction(-1), Fraction(1))] * 3
    lo, hi = e.eval_interval(box)
    assert lo <= e.eval([0, 0, 0]) <= hi
    assert not e.is_zero
    assert (e - e).is_zero
