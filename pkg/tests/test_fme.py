from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from realshield.errors import EliminationBudgetExceeded
from realshield.fme import check_forall_exists, eliminate
from realshield.linear import Literal, LinearAtom, Predicate, parse_atoms

import oracles
from strategies import atoms

L = Literal



@pytest.fixture
def table():
    t = {
        "M1'": Predicate.from_atoms("M1'", parse_atoms("abs(mu) < 0.2", ["mu"])),
        "M2'": Predicate.from_atoms("M2'", parse_atoms("abs(mu) < 0.02", ["mu"])),
        "X": Predicate.from_atoms("X", parse_atoms("x < 5", ["x"])),
        "S": Predicate.from_atoms("S", parse_atoms("y > x", ["x", "y"])),
    }
    return t


def test_plain_satisfiability(table):
    assert check_forall_exists(set(), {L("M1'", True), L("M2'", True)}, table)


def test_infeasible_outputs(table):
    assert not check_forall_exists(set(), {L("M1'", False), L("M2'", True)}, table)


def test_shared_constraint_vacuous_projection(table):
    assert check_forall_exists({L("X", True)}, set(), table, shared=[L("S", True)],
                               output_variables={"y"})


def test_input_dependent_output_fails():
    t = {
        "IN": Predicate.from_atoms("IN", parse_atoms("x < 5", ["x"])),
        "OUT": Predicate.from_atoms("OUT", parse_atoms("y < 1 & y > x", ["x", "y"])),
    }
    # x = 4 leaves no y with x < y < 1
    assert not check_forall_exists({L("IN", True)}, {L("OUT", True)}, t, output_variables={"y"})
    t["IN"] = Predicate.from_atoms("IN", parse_atoms("x < 0", ["x"]))
    assert check_forall_exists({L("IN", True)}, {L("OUT", True)}, t, output_variables={"y"})


def test_budget():
    rows = [LinearAtom.make({"x": 1, f"v{i}": 1}, "<=", i) for i in range(30)]
    rows += [LinearAtom.make({"x": -1, f"w{i}": 1}, "<=", i) for i in range(30)]
    with pytest.raises(EliminationBudgetExceeded):
        eliminate(rows, {"x"}, budget=100)


@settings(max_examples=200, deadline=None)
@given(st.lists(atoms(), min_size=1, max_size=5))
def test_full_elimination_decides_feasibility(cs):
    assert (eliminate(cs, {"x", "y", "z"}) is not None) == oracles.feasible(cs)


@settings(max_examples=150, deadline=None)
@given(st.lists(atoms(), min_size=1, max_size=4),
       st.fractions(-4, 4, max_denominator=3), st.fractions(-4, 4, max_denominator=3))
def test_projection_is_exact(cs, x, y):
    """A point (x, y) lies in the projection iff some z completes it."""
    proj = eliminate(cs, {"z"})
    fixed = cs + [LinearAtom.make({"x": 1}, "=", x), LinearAtom.make({"y": 1}, "=", y)]
    expected = oracles.feasible(fixed)
    if proj is None:
        assert not expected
    else:
        got = all(a.holds({"x": x, "y": y, **{v: 0 for v in a.variables if v not in "xy"}})
                  for a in proj)
        assert got == expected
