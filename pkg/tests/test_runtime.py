import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import synthesized
from oracles import ols_next
from realshield import abstract, benchmark, parse_spec, synthesize
from realshield.errors import ImpossibleInputObserved, MissingVariable
from realshield.linear import Literal
from realshield.runtime import (FAILSAFE, FAST, PASS, PREDICTED, SOLVED, STRICT, Runtime,
                                default_mode, moving_average, predict, solve_correction,
                                validate)
from realshield.spec import RuntimeConfig

F = Fraction


@pytest.fixture
def rt():
    a, r = synthesized("running_example")
    return Runtime(r.shield, a, STRICT)


def afr():
    a, _ = synthesized("running_example")
    return a.predicates


def test_abstract_boundaries(rt):
    m1, m2 = 1, 2
    assert rt.abstract_outputs({"mu": F(15, 100)}) == m1
    assert rt.abstract_outputs({"mu": F(0)}) == m1 | m2
    assert rt.abstract_outputs({"mu": F(1, 5)}) == 0
    assert rt.abstract_outputs({"mu": F(-1, 5)}) == 0
    assert rt.abstract_inputs({"l": 1}, {"mu": 0}) == (1, 3)


def test_missing_variable(rt):
    with pytest.raises(MissingVariable):
        rt.run_step({}, {"mu": 0})
    with pytest.raises(MissingVariable):
        rt.abstract_inputs({"l": 0}, {})


def test_predict_examples():
    assert predict([F(x, 100) for x in (10, 12, 14, 16, 18)], 5) == F(1, 5)
    assert predict([F(3, 7)] * 3, 5) == F(3, 7)
    assert predict([F(3, 7)] * 3, 2) == F(3, 7)
    assert predict([F(18, 100)], 5) is None
    assert predict([], 5) is None
    assert predict([0.10, 0.12, 0.14, 0.16, 0.18], 5, exact_mode=False) == pytest.approx(0.2)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.fractions(-10, 10, max_denominator=50), min_size=2, max_size=9),
       st.integers(2, 6))
def test_predict_matches_normal_equations(ys, w):
    assert predict(ys, w) == ols_next(ys[-w:])


def test_moving_average():
    assert moving_average([F(1), F(2), F(3), F(6)], 2) == F(9, 2)
    assert moving_average([], 5) is None


def test_validate_examples():
    p = afr()
    assert not validate({"mu": F(1, 5)}, [Literal("M1", True)], p)
    assert validate({"mu": F(15, 100)}, [Literal("M1", True), Literal("M2", False)], p)
    assert validate({"mu": F(9)}, [], p)


def test_solve_correction_examples():
    p = afr()
    cfg = RuntimeConfig().engine()
    dom = {"mu": ()}
    assert solve_correction([Literal("M1", True)], p, {"mu": F(15, 100)}, dom, cfg) == {"mu": F(15, 100)}
    v = solve_correction([Literal("M1", True), Literal("M2", True)], p, {"mu": F(15, 100)}, dom, cfg)["mu"]
    assert F(-1, 50) < v < F(1, 50) and F(1, 50) - v <= F(1, 10 ** 6)
    assert solve_correction([Literal("M1", True), Literal("M2", True)], p, {"mu": None}, dom, cfg) == {"mu": 0}
    # a negated conjunction splits into cases; the nearest side wins
    v = solve_correction([Literal("M2", False)], p, {"mu": F(-1, 100)}, dom, cfg)["mu"]
    assert v <= F(-1, 50) and v > F(-3, 100)


def test_solve_correction_feasibility_only():
    p = afr()
    v = solve_correction([Literal("M1", True), Literal("M2", False)], p, {"mu": F(1, 10)},
                         None, RuntimeConfig().engine(), "feasibility")["mu"]
    assert validate({"mu": v}, [Literal("M1", True), Literal("M2", False)], p)


def test_correction_in_power_mode(rt):
    res = rt.run_step({"l": 1}, {"mu": F(1, 4)})
    assert res.provenance == SOLVED
    assert abs(res.values["mu"]) < F(1, 5)
    assert rt.history["mu"][-1] == res.values["mu"]


def test_prediction_used_with_history(rt):
    for x in (F(10, 100), F(11, 100), F(12, 100)):
        assert rt.run_step({"l": 1}, {"mu": x}).provenance == PASS
    res = rt.run_step({"l": 1}, {"mu": F(1, 2)})
    assert res.provenance == PREDICTED
    assert res.values["mu"] == F(13, 100)
    # a prediction outside the required band falls back to the LP
    for x in (F(17, 100), F(19, 100)):
        rt.run_step({"l": 1}, {"mu": x})
    res = rt.run_step({"l": 1}, {"mu": F(1, 2)})
    assert res.provenance == SOLVED and abs(res.values["mu"]) < F(1, 5)


def test_red_edge_input_gets_realizable_output(rt):
    rt.run_step({"l": 1}, {"mu": F(1, 10)})
    res = rt.run_step({"l": 0}, {"mu": F(1, 2)})
    assert res.corrected == 3
    assert abs(res.values["mu"]) < F(1, 50)


def test_pass_through_identity(rt):
    trace = [({"l": 0}, {"mu": F(9, 10)}), ({"l": 1}, {"mu": F(1, 10)}), ({"l": 0}, {"mu": F(1, 100)}),
             ({"l": 1}, {"mu": -F(19, 100)})]
    for I, O in trace:
        res = rt.run_step(I, O)
        assert res.provenance == PASS and res.values["mu"] is O["mu"]
    assert list(rt.history["mu"]) == [O["mu"] for _, O in trace]


def test_step_letter_rejects_impossible(rt):
    # M2 without M1 cannot occur
    with pytest.raises(ImpossibleInputObserved):
        rt.step_letter(rt.state, 0 | 2 << 1)


def test_failsafe_holds_and_flags_without_safe_letter():
    # high right after low is physically impossible; the spec would then need fill and drain at once
    a, r = synthesized("water_tank")
    rt = Runtime(r.shield, a, STRICT)
    first = rt.run_step({"l": F(2)}, {"flow_in": F(3, 2), "flow_out": F(0)})
    res = rt.run_step({"l": F(95)}, {"flow_in": F(1, 2), "flow_out": F(0)})
    assert res.provenance == FAILSAFE and res.flagged
    assert res.values == first.values and res.next_state == res.state


def test_failsafe_resyncs_when_possible():
    d = json.loads(benchmark("running_example_bool").read_text())
    d["physics"] = {"states": ["p0", "p1", "x"], "init": "p0", "unsafe": ["x"], "transitions": [
        {"src": "p0", "guard": "A", "dst": "p1"}, {"src": "p0", "guard": "!A", "dst": "p0"},
        {"src": "p1", "guard": "A", "dst": "x"}, {"src": "p1", "guard": "!A", "dst": "p0"}]}
    a = abstract(parse_spec(d))
    sh = synthesize(a).shield
    rt = Runtime(sh, a, STRICT)
    assert rt.run_step({}, {"A": True, "B1": True, "B2": False}).provenance == PASS
    # A twice in a row cannot happen; B1 false would still violate the spec
    res = rt.run_step({}, {"A": True, "B1": False, "B2": False})
    assert res.provenance == FAILSAFE and not res.flagged
    assert res.values == {"B1": True, "B2": False}
    assert sh.components[res.next_state][0] == "1"
    assert rt.run_step({}, {"A": False, "B1": False, "B2": True}).provenance == PASS


def _letter(a, res):
    bits = res.inputs | res.corrected << len(a.inputs)
    return {v: bool(bits >> i & 1) for i, v in enumerate(a.inputs + a.outputs)}


def test_default_mode(monkeypatch):
    monkeypatch.delenv("REALSHIELD_MODE", raising=False)
    assert default_mode() == STRICT
    monkeypatch.setenv("REALSHIELD_MODE", "Fast")
    assert default_mode() == FAST
    monkeypatch.setenv("REALSHIELD_MODE", "turbo")
    with pytest.raises(ValueError):
        default_mode()


mu = st.one_of(st.sampled_from([F(0), F(1, 5), F(-1, 5), F(1, 50), F(-1, 50), F(1), F(-1)]),
               st.fractions(-1, 1, max_denominator=1000))


def run_checked(rt, steps):
    a = rt.spec
    q = a.automaton
    s = q.init
    for I, O in steps:
        res = rt.run_step(I, O)
        assert rt.abstract_outputs(res.values) == res.corrected
        assert (res.provenance == PASS) == (res.corrected == res.outputs)
        s = q.step(s, _letter(a, res))
        assert s not in q.unsafe


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([F(0), F(1), F(1, 2)]), mu), max_size=25))
def test_consistency_and_safety_running(trace):
    a, r = synthesized("running_example")
    run_checked(Runtime(r.shield, a, STRICT),
                [({"l": l}, {"mu": m}) for l, m in trace])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([F(0), F(1)]), mu), max_size=25),
       st.fractions(0, 3, max_denominator=4))
def test_consistency_and_safety_with_clock(trace, t0):
    a, r = synthesized("powertrain_r32_r33")
    run_checked(Runtime(r.shield, a, STRICT),
                [({"t": t0 + k, "l": l}, {"mu": m}) for k, (l, m) in enumerate(trace)])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0.0, 1.0]), st.floats(-1, 1)), max_size=25))
def test_fast_mode_agrees_on_letters(trace):
    a, r = synthesized("running_example")
    strict, fast = Runtime(r.shield, a, STRICT), Runtime(r.shield, a, FAST)
    for l, m in trace:
        x, y = strict.run_step({"l": l}, {"mu": m}), fast.run_step({"l": l}, {"mu": m})
        assert (x.inputs, x.outputs, x.corrected) == (y.inputs, y.outputs, y.corrected)
        assert isinstance(y.values["mu"], float)
        assert fast.abstract_outputs(y.values) == y.corrected
