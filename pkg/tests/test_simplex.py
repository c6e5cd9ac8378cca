from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from realshield.engine import feasible
from realshield.errors import Unbounded
from realshield.linear import LinearAtom
from realshield.simplex import Delta, Simplex

import oracles
from strategies import atoms


def atom(coeffs, rel, bound):
    return LinearAtom.make(coeffs, rel, Fraction(bound))


deltas = st.builds(Delta, st.fractions(max_denominator=10), st.integers(-3, 3))


@given(deltas, deltas)
def test_delta_order_is_lexicographic(a, b):
    assert (a < b) == ((a.c, a.k) < (b.c, b.k))
    assert (a <= b) == ((a.c, a.k) <= (b.c, b.k))
    assert (a == b) == ((a.c, a.k) == (b.c, b.k))


@given(deltas, deltas)
def test_delta_arithmetic(a, b):
    s = a + b
    assert (s.c, s.k) == (a.c + b.c, a.k + b.k)
    assert (a - b) + b == a
    assert -(-a) == a


def test_point_interval():
    m = feasible([atom({"x": 1}, "<=", 1), atom({"x": 1}, ">=", 1)])
    assert m == {"x": 1}


@pytest.mark.parametrize("rel_lo", [">", ">="])
def test_strict_contradiction(rel_lo):
    res = feasible([atom({"x": 1}, "<", 1), atom({"x": 1}, rel_lo, 1)])
    assert res is None


def test_strict_open_interval_model_is_interior():
    m = feasible([atom({"x": 1}, ">", 0), atom({"x": 1}, "<", Fraction(1, 1000))])
    assert 0 < m["x"] < Fraction(1, 1000)


def test_two_variable_system():
    cs = [atom({"x": 1, "y": 1}, "<=", 5), atom({"x": 1, "y": -1}, ">", 2), atom({"y": 1}, ">=", 1)]
    m = feasible(cs)
    assert m is not None and all(c.holds(m) for c in cs)
    assert feasible(cs + [atom({"x": 1}, "<", 3)]) is None


def test_minimize():
    s = Simplex()
    x, y = s.var("x"), s.var("y")
    r = s.row({x: 1, y: 1})
    s.bound(x, lo=Delta(Fraction(0)))
    s.bound(y, lo=Delta(Fraction(1)))
    s.bound(r, hi=Delta(Fraction(5)))
    assert s.check()
    assert s.minimize({x: 1, y: 2}) == Delta(Fraction(2))
    assert s.minimize({x: -1}) == Delta(Fraction(-4))


def test_minimize_unbounded():
    s = Simplex()
    x = s.var("x")
    s.bound(x, lo=Delta(Fraction(0)))
    assert s.check()
    with pytest.raises(Unbounded):
        s.minimize({x: -1})


def test_strict_bound_optimum_is_symbolic():
    s = Simplex()
    x = s.var("x")
    s.bound(x, hi=Delta(Fraction(2), -1))
    s.check()
    assert s.minimize({x: -1}) == Delta(Fraction(-2), 1)


@settings(max_examples=300, deadline=None)
@given(st.lists(atoms(), min_size=1, max_size=6))
def test_feasible_agrees_with_elimination_oracle(cs):
    m = feasible(cs)
    assert (m is not None) == oracles.feasible(cs)
    if m is not None:
        full = {v: m.get(v, Fraction(0)) for c in cs for v in c.variables}
        assert all(c.holds(full) for c in cs)
