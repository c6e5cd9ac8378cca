"""Regenerate the bundled benchmark specs whose automata are tedious to write by hand.

Each automaton is given as a step function over Boolean letters; guards are
minimized sum-of-products covers of the letter sets leading to each successor.

    python3 scripts/make_benchmarks.py [outdir]
"""
import itertools
import json
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "realshield" / "benchmarks"


def implicants(minterms, n):
    """Prime implicants as (value, care-mask) pairs by repeated pairwise merging."""
    full = (1 << n) - 1
    level = {(m, full) for m in minterms}
    primes = set()
    while level:
        merged, used = set(), set()
        by_mask = {}
        for v, m in level:
            by_mask.setdefault(m, []).append(v)
        for m, vals in by_mask.items():
            vals = set(vals)
            for v in vals:
                for b in range(n):
                    bit = 1 << b
                    if m & bit and not v & bit and v | bit in vals:
                        merged.add((v, m & ~bit))
                        used.add((v, m))
                        used.add((v | bit, m))
        primes |= level - used
        level = merged
    return primes


def cover(minterms, n):
    """Greedy cover of ``minterms`` by prime implicants."""
    todo = set(minterms)
    primes = sorted(implicants(minterms, n), key=lambda p: (bin(p[1]).count("1"), p))
    out = []
    while todo:
        best = max(primes, key=lambda p: sum(1 for t in todo if t & p[1] == p[0]))
        out.append(best)
        todo -= {t for t in todo if t & best[1] == best[0]}
    return out


def guard_text(minterms, names):
    n = len(names)
    if len(minterms) == 1 << n:
        return "true"
    cubes = []
    for v, m in sorted(cover(minterms, n), key=lambda p: (-bin(p[1]).count("1"), p)):
        lits = [names[b] if v >> b & 1 else "!" + names[b] for b in range(n) if m >> b & 1]
        cubes.append(" & ".join(lits) or "true")
    if len(cubes) == 1:
        return cubes[0]
    return " | ".join(f"({c})" if "&" in c else c for c in cubes)


def automaton(states, init, names, step, bad="bad"):
    """Transition list from ``step(state, letter_dict) -> next state`` (None = bad)."""
    trans = []
    for s in states:
        dest = {}
        for bits in itertools.product((False, True), repeat=len(names)):
            letter = dict(zip(names, bits))
            d = step(s, letter)
            m = sum(1 << i for i, b in enumerate(bits) if b)
            dest.setdefault(bad if d is None else d, []).append(m)
        for d, ms in sorted(dest.items(), key=lambda kv: kv[0] == bad):
            trans.append({"src": s, "guard": guard_text(ms, names), "dst": d})
    return {"states": list(states) + [bad], "init": init, "unsafe": [bad], "transitions": trans}


# -- powertrain ---------------------------------------------------------------

K = 2           # steps a settling obligation lasts after its trigger


def powertrain():
    names = ["L1", "L0", "A0", "T1", "T2", "M1", "M2", "M3", "M4"]
    states = [f"{m2}{m4}{p}" for m2 in range(K + 1) for m4 in range(K + 1) for p in "np"]

    def step(s, x):
        m2, m4, pp = int(s[0]), int(s[1]), s[2] == "p"
        win = x["T1"] and x["T2"]
        normal, power = x["L0"], x["L1"]
        other = not normal and not power
        trig2 = win and normal and (not x["A0"] or pp)
        trig4 = win and other and not x["A0"]
        need = {
            "M1": win and power,
            "M3": win and normal,
            "M2": trig2 or m2 > 0,
            "M4": trig4 or m4 > 0,
        }
        if any(v and not x[k] for k, v in need.items()):
            return None
        m2 = K if trig2 else max(m2 - 1, 0)
        m4 = K if trig4 else max(m4 - 1, 0)
        return f"{m2}{m4}{'p' if power else 'n'}"

    reach = _reachable("00n", names, step)
    return {
        "name": "powertrain",
        "description": "Air-fuel ratio bounds over engine modes: |mu| < 0.05 in normal mode, "
                       "|mu| < 0.2 in power mode, |mu| < 0.02 for two steps after a throttle "
                       "jump in normal mode or after leaving power mode, and |mu| < 0.1 for two "
                       "steps after a throttle jump during startup or sensor failure; all inside "
                       "the monitoring window [tau_s, T_end].",
        "variables": [
            {"name": "t", "kind": "clock", "range": [0, None]},
            {"name": "l", "kind": "input-real", "range": [0, 3]},
            {"name": "da", "kind": "input-real", "range": [-10, 10]},
            {"name": "mu", "kind": "output-real", "range": [-1, 1]},
        ],
        "constants": {"tau_s": 1, "T_end": 95},
        "predicates": [
            {"id": "L1", "expr": "l = 1"},
            {"id": "L0", "expr": "l = 0"},
            {"id": "A0", "expr": "abs(da) < 0.5"},
            {"id": "T1", "expr": "t >= tau_s"},
            {"id": "T2", "expr": "t <= T_end"},
            {"id": "M1", "expr": "abs(mu) < 0.2"},
            {"id": "M2", "expr": "abs(mu) < 0.02"},
            {"id": "M3", "expr": "abs(mu) < 0.05"},
            {"id": "M4", "expr": "abs(mu) < 0.1"},
        ],
        "automaton": automaton(reach, "00n", names, step),
        "runtime": {"history": 5, "window": 5},
        "simulation": {
            "plant": "powertrain", "dt": "1/10",
            "schedule": [[0, 2], [1, 0], [20, 1], [35, 0], [55, 3], [60, 0], [75, 1], [85, 0]],
        },
    }


def _reachable(init, names, step):
    seen, todo = [init], [init]
    while todo:
        s = todo.pop()
        for bits in itertools.product((False, True), repeat=len(names)):
            d = step(s, dict(zip(names, bits)))
            if d is not None and d not in seen:
                seen.append(d)
                todo.append(d)
    return seen


# -- water tank -----------------------------------------------------------------

def water_tank():
    names = ["LOW", "HIGH", "FILL", "DRAIN"]
    hold = 3

    def step(s, x):
        nf, nd = int(s[1]), int(s[3])
        if (x["LOW"] or nf) and not x["FILL"]:
            return None
        if (x["HIGH"] or nd) and not x["DRAIN"]:
            return None
        nf = hold if x["LOW"] else max(nf - 1, 0)
        nd = hold if x["HIGH"] else max(nd - 1, 0)
        return f"f{nf}d{nd}"

    def phys(s, x):
        kind, n = s[0], int(s[1])
        if (kind == "l" and n and x["HIGH"]) or (kind == "h" and n and x["LOW"]):
            return None
        if x["LOW"]:
            return f"l{hold}"
        if x["HIGH"]:
            return f"h{hold}"
        return f"{kind}{max(n - 1, 0)}" if n > 1 else "p0"

    reach = _reachable("f0d0", names, step)
    preach = _reachable("p0", ["LOW", "HIGH"], phys)
    return {
        "name": "water_tank",
        "description": "Tank level control: a low level forces filling for the current and the next "
                       "three steps, a high level forces draining likewise.  The physics block rules "
                       "out a high level within three steps of a low one and vice versa.",
        "variables": [
            {"name": "l", "kind": "input-real", "range": [0, 100]},
            {"name": "flow_in", "kind": "output-real", "range": [0, 3]},
            {"name": "flow_out", "kind": "output-real", "range": [0, 3]},
        ],
        "predicates": [
            {"id": "LOW", "expr": "l < 4"},
            {"id": "HIGH", "expr": "l > 93"},
            {"id": "FILL", "expr": "flow_out = 0 & 1 < flow_in < 2"},
            {"id": "DRAIN", "expr": "flow_in = 0 & 0 < flow_out < 1"},
        ],
        "automaton": automaton(reach, "f0d0", names, step),
        "physics": automaton(preach, "p0", ["LOW", "HIGH"], phys, bad="impossible"),
        "runtime": {"history": 5, "window": 5},
        "simulation": {"plant": "water_tank", "dt": "1", "level0": "50"},
        "table2": {"verbatim": True, "P_I": 2, "P_O": 2, "I": 2, "O": 2, "I_r": 1, "O_r": 2},
    }


# -- driving --------------------------------------------------------------------

def driving():
    names = ["RISK", "STEADY", "STOP"]
    hold = 4    # 2 s at dt = 0.5

    def step(s, x):
        n = 0 if s == "go" else int(s[1])
        stop = x["RISK"] or n > 0
        if stop and not x["STOP"]:
            return None
        if not stop and not x["STEADY"]:
            return None
        n = hold if x["RISK"] else max(n - 1, 0)
        return f"s{n}" if n else "go"

    reach = _reachable("go", names, step)
    return {
        "name": "driving",
        "description": "Ego vehicle at an intersection: cruise at the steady speed while there is no "
                       "collision risk, and stop for at least two seconds once a risk appears.",
        "variables": [
            {"name": "y_ego", "kind": "input-real", "range": [-100, 100]},
            {"name": "x_adv", "kind": "input-real", "range": [-100, 100]},
            {"name": "v_ego", "kind": "output-real", "range": [-1, 5]},
        ],
        "constants": {"v_s": 2},
        "predicates": [
            {"id": "RISK", "expr": "abs(y_ego - x_adv) < 4"},
            {"id": "STEADY", "expr": "abs(v_ego - v_s) < 0.1"},
            {"id": "STOP", "expr": "abs(v_ego) < 0.1"},
        ],
        "automaton": automaton(reach, "go", names, step),
        "runtime": {"history": 5, "window": 5},
        "simulation": {
            "plant": "driving", "dt": "1/2", "steps": 40,
            "y0": "16", "x0": "24.5", "v_adv": "3",
            "script": [[12, "v_ego", "1.5"], [13, "v_ego", "1.5"]],
        },
    }


# -- adaptive cruise ----------------------------------------------------------

def cruise():
    names = ["CLOSE", "MOVING", "FWD", "GO", "CREEP"]

    def step(s, x):
        if not x["FWD"] or (x["MOVING"] and not x["GO"]) or (x["CLOSE"] and not x["CREEP"]):
            return None
        return "ok"

    return {
        "name": "cruise",
        "description": "Adaptive cruise control: never reverse, keep moving while the lead vehicle "
                       "moves, and creep below 1 m/s when the gap is under 10 m.",
        "variables": [
            {"name": "gap", "kind": "input-real", "range": [0, 200]},
            {"name": "v_lead", "kind": "input-real", "range": [0, 40]},
            {"name": "v_ego", "kind": "output-real", "range": [-5, 40]},
        ],
        "predicates": [
            {"id": "CLOSE", "expr": "gap < 10"},
            {"id": "MOVING", "expr": "v_lead > 0"},
            {"id": "FWD", "expr": "v_ego >= 0"},
            {"id": "GO", "expr": "v_ego > 0"},
            {"id": "CREEP", "expr": "v_ego < 1"},
        ],
        "automaton": automaton(["ok"], "ok", names, step),
        "runtime": {"history": 5, "window": 5},
        "simulation": {"plant": "cruise", "dt": "1/10", "gap0": "30"},
    }


def main(outdir=OUT):
    outdir = Path(outdir)
    for build in (powertrain, water_tank, driving, cruise):
        doc = build()
        path = outdir / f"{doc['name']}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{path}: {len(doc['automaton']['states'])} states, "
              f"{len(doc['automaton']['transitions'])} transitions")


if __name__ == "__main__":
    main(*sys.argv[1:])
