import io

import numpy as np
import pytest

from conftest import synthesized
from realshield.runtime import FAST, PASS, STRICT
from realshield.sim import (ErrorPolicy, Monitor, count_violations, csv_columns, csv_text,
                            make_plant, read_csv, simulate)
from realshield.spec import parse_spec


def run(name, steps=300, rate=0.05, seed=1, mode=STRICT, **kw):
    a, r = synthesized(name)
    return simulate(r.shield, a, steps, ErrorPolicy(rate, seed), mode=mode, **kw)


def test_policy_validation():
    with pytest.raises(ValueError):
        ErrorPolicy(1.5)
    with pytest.raises(ValueError):
        ErrorPolicy.scripted([[3, "mu", "0.3"], [3, "mu", "0.4"]])
    p = ErrorPolicy.scripted([[1, "mu", "1/4"]])
    assert p.script == ((1, "mu", 0.25),)


def test_draws_deterministic():
    a = ErrorPolicy(0.3, 5).draws(50)
    b = ErrorPolicy(0.3, 5).draws(50)
    assert (a[0] == b[0]).all() and (a[1] == b[1]).all()
    assert not (a[0] == ErrorPolicy(0.3, 6).draws(50)[0]).all()


@pytest.mark.parametrize("name", ["powertrain", "water_tank", "driving", "cruise"])
def test_designs_are_compliant(name):
    sim = run(name, 300, 0.0)
    assert sim.metrics["violations_unshielded"] == 0
    assert sim.metrics["provenance"][PASS] == 300


def test_unknown_plant():
    a, _ = synthesized("running_example_bool")
    with pytest.raises(ValueError):
        make_plant(a)


def test_csv_is_reproducible():
    texts = {csv_text(run("powertrain", 200, 0.1, seed=3), timings=False) for _ in range(2)}
    assert len(texts) == 1
    assert texts != {csv_text(run("powertrain", 200, 0.1, seed=4), timings=False)}


def test_csv_header():
    a, _ = synthesized("powertrain")
    assert csv_columns(a)[2] == ["step", "t", "l", "da", "mu", "mu'", "provenance",
                                 "bool_us", "pred_us", "lp_us"]
    a, _ = synthesized("water_tank")
    assert csv_columns(a)[2][2:7] == ["l", "flow_in", "flow_out", "flow_in'", "flow_out'"]


@pytest.mark.parametrize("name, mode", [("powertrain", FAST), ("water_tank", STRICT),
                                        ("driving", FAST), ("powertrain_r32_r33", STRICT)])
def test_metrics_recomputed_from_csv(name, mode):
    sim = run(name, 400, 0.1, seed=2, mode=mode)
    rows = read_csv(sim.spec, io.StringIO(csv_text(sim)))
    assert len(rows) == 400
    assert count_violations(sim.spec, [(i, e) for i, _, e, _ in rows]) == sim.metrics["violations_shielded"]
    assert sum(p != PASS for *_, p in rows) == sim.metrics["corrections"]
    raw = count_violations(sim.spec, [(i, d) for i, d, _, _ in rows])
    assert raw >= sim.metrics["violations_shielded"]


def test_monitor_counts_and_recovers():
    a, _ = synthesized("running_example")
    m = Monitor(a)
    assert m.feed({"l": 1}, {"mu": 0.5}) is False
    assert m.feed({"l": 1}, {"mu": 0.1}) is True
    assert m.feed({"l": 0}, {"mu": 0.1}) is False
    assert m.feed({"l": 0}, {"mu": 0.0}) is True
    assert m.violations == 2


def test_shield_fixes_scripted_driving_error():
    a, r = synthesized("driving")
    script = a.spec.simulation["script"]
    sim = simulate(r.shield, a, 40, ErrorPolicy.scripted(script), mode=STRICT)
    m = sim.metrics
    assert m["violations_unshielded"] > 0 and m["violations_shielded"] == 0
    recs = sim.records
    assert [x.provenance != PASS for x in recs[12:14]] == [True, True]
    risk = [abs(x.inputs["y_ego"] - x.inputs["x_adv"]) < 4 for x in recs]
    first = risk.index(True)
    # the error at t = 6 s lands inside the stop that started with the first risky step
    assert recs[12].t == 6.0 and first < 12 <= first + 4
    assert all(abs(x.emitted["v_ego"]) < 0.1 for x in recs[first:first + 5])
    assert all(abs(x.emitted["v_ego"]) < 0.1 for x in recs[12:14])


def test_history_holds_emitted_values():
    sim = run("powertrain", 120, 0.2, seed=9)
    emitted = [r.emitted["mu"] for r in sim.records]
    assert any(r.emitted != r.design for r in sim.records)
    assert all(np.isfinite(float(x)) for x in emitted)
