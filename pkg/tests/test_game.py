import json

import numpy as np
import pytest

from conftest import synthesized
from oracles import hd, random_game, winning
from realshield import abstract, benchmark, benchmark_names, parse_spec, synthesize
from realshield.automata import assignment_of
from realshield.errors import ShieldSpecMismatch, UnrealizableSpec
from realshield.game import SafetyGame, check_realizable, solve_safety_game
from realshield.shieldio import export_shield, shield_from_document


def same_region(game):
    mine = solve_safety_game(game).win.tolist()
    return mine == winning(game.succ.tolist(), game.unsafe.tolist())


@pytest.mark.parametrize("name", benchmark_names())
def test_bundled_regions_match_oracle(name):
    _, r = synthesized(name)
    assert same_region(r.game)
    assert same_region(r.constrained)


def test_random_regions_match_oracle():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(1, 65))
        ab, pb = int(rng.integers(0, 4)), int(rng.integers(0, 3))
        succ, unsafe = random_game(rng, n, ab, pb, float(rng.uniform(0.02, 0.3)))
        g = SafetyGame([str(i) for i in range(n)], succ, unsafe, 0,
                       tuple(f"a{i}" for i in range(ab)), tuple(f"p{i}" for i in range(pb)))
        g.check()
        mismatches += not same_region(g)
    assert mismatches == 0


def test_region_is_closed(bundled):
    _, r = bundled
    g, w = r.constrained, r.constrained_region.win
    for s in np.flatnonzero(w):
        assert w[g.succ[s]].any(axis=1).all()


def test_shield_stays_in_region(bundled):
    a, r = bundled
    sh = r.shield
    dontcare = r.constrained.names.index("dontcare")
    for i, g in enumerate(sh.game_index):
        assert r.constrained_region.win[g]
        assert sh.components[i][0] not in a.automaton.unsafe
        for letter in range(sh.next.shape[1]):
            t = r.constrained.succ[g, letter, sh.out[i, letter]]
            assert r.constrained_region.win[t]
            assert (sh.next[i, letter] == -1) == (t == dontcare)


def test_hamming_minimal(bundled):
    """Every emitted letter is HD-minimal among letters the oracle region keeps winning."""
    a, r = bundled
    g = r.constrained
    win = winning(g.succ.tolist(), g.unsafe.tolist())
    n_in = len(a.inputs)
    nP = g.succ.shape[2]
    bad = 0
    for i, s in enumerate(r.shield.game_index):
        for letter in range(g.succ.shape[1]):
            o, chosen = letter >> n_in, int(r.shield.out[i, letter])
            best = min(hd(o, p) for p in range(nP) if win[g.succ[s, letter, p]])
            bad += hd(o, chosen) != best
            assert not r.smaller_hd_moves(i, letter)
    assert bad == 0


def test_pass_through_when_compliant(bundled):
    a, r = bundled
    sh = r.shield
    q = a.automaton
    order = a.inputs + a.outputs
    for i in range(sh.n):
        qs = sh.components[i][0]
        for letter in range(sh.next.shape[1]):
            if sh.next[i, letter] < 0 or sh.components[i][1] == "V":
                continue
            d = q.step(qs, assignment_of(letter, order))
            if d is not None and d not in q.unsafe:
                assert sh.out[i, letter] == letter >> len(a.inputs)


def test_boolean_running_example():
    a, r = synthesized("running_example_bool")
    sh = r.shield
    s = sh.init
    for b2 in (False, True):
        s1, out = sh.step(s, sh.io_letter({"A": True, "B1": True, "B2": b2}))
        assert assignment_of(out, sh.primed) == {"B1'": True, "B2'": b2}
        for b1 in (False, True):
            s2, out = sh.step(s1, sh.io_letter({"A": False, "B1": b1, "B2": False}))
            assert assignment_of(out, sh.primed) == {"B1'": b1, "B2'": True}
            q = a.automaton.run([{"A": True, "B1": True, "B2": b2}, {"A": False, "B1": b1, "B2": True}])
            assert not set(q) & a.automaton.unsafe
            assert sh.components[s2][1] == "V"


def test_audit_clean(bundled):
    a, r = bundled
    assert check_realizable(r.shield, a, relax=r.relax) == []


def test_skip_rf_shield_is_unrealizable():
    a, _ = synthesized("running_example")
    raw = synthesize(a, skip_rf=True)
    v = check_realizable(raw.shield, a)
    assert v
    assert {"L1": False, "M1": False, "M2": False} in [x["input"] for x in v]
    assert all(x["output"] == {"M1'": False, "M2'": True} for x in v)


def test_shield_document_round_trip(bundled):
    a, r = bundled
    doc = json.loads(json.dumps(export_shield(r.shield, a.spec, r.report)))
    sh, spec = shield_from_document(doc)
    assert spec.name == a.spec.name
    care = r.shield.next >= 0
    assert (sh.next == r.shield.next).all()
    assert (sh.out[care] == r.shield.out[care]).all()


def test_shield_document_tampered():
    a, r = synthesized("running_example")
    doc = export_shield(r.shield, a.spec)
    doc["spec"]["predicates"][2]["expr"] = "abs(mu) < 0.5"
    with pytest.raises(ShieldSpecMismatch):
        shield_from_document(doc)
    doc = export_shield(r.shield, a.spec)
    doc["format"] = "other"
    with pytest.raises(ShieldSpecMismatch):
        shield_from_document(doc)


def test_unsafe_initial_state():
    d = json.loads(benchmark("running_example_bool").read_text())
    d["automaton"]["init"] = "2"
    with pytest.raises(UnrealizableSpec):
        synthesize(abstract(parse_spec(d)))


def test_infeasible_obligation_is_unrealizable():
    d = json.loads(benchmark("running_example").read_text())
    d["predicates"][2]["expr"] = "abs(mu) < 0.02 & mu > 0.5"
    a = abstract(parse_spec(d))
    with pytest.raises(UnrealizableSpec) as e:
        synthesize(a)
    assert e.value.counterexample
    synthesize(a, skip_rf=True)
