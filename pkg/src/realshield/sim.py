"""Closed- and open-loop simulations of the bundled benchmarks with error injection."""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .linear import rational
from .runtime import PASS, PREDICTED, SOLVED, FAILSAFE, Runtime, exact
from .spec import CLOCK, INPUT_REAL, OUTPUT_REAL, OUTPUT_BOOL, prime


@dataclass
class ErrorPolicy:
    """Random errors at ``rate`` per step, plus scripted (step, variable, value) overrides."""

    rate: float = 0.0
    seed: int = 0
    script: tuple = ()

    def __post_init__(self):
        if not 0 <= self.rate <= 1:
            raise ValueError(f"error rate {self.rate} outside [0, 1]")
        steps = [s for s, _, _ in self.script]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("scripted error steps must be strictly increasing")

    @classmethod
    def scripted(cls, entries, seed=0):
        return cls(0.0, seed, tuple((int(s), v, float(rational(x))) for s, v, x in entries))

    def draws(self, steps):
        """Per-step (hit, uniforms) drawn up front so shielded and raw runs see the same errors."""
        rng = np.random.default_rng(self.seed)
        hits = rng.random(steps) < self.rate
        return hits, rng.random((steps, 4))


# -- spec-following design ------------------------------------------------------

class Chooser:
    """Picks the first candidate output whose letter keeps the spec automaton safe."""

    def __init__(self, spec):
        self.spec = spec
        self.table = spec.automaton.compile(spec.letters)
        self.unsafe = {spec.automaton.index(u) for u in spec.automaton.unsafe}
        self.reset()

    def reset(self):
        self.state = self.spec.automaton.index(self.spec.automaton.init)

    def pick(self, I_r, candidates):
        for O_r in candidates:
            nxt = self.table[self.state, letter(self.spec, I_r, O_r)]
            if nxt >= 0 and nxt not in self.unsafe:
                self.state = int(nxt)
                return O_r
        raise RuntimeError("no candidate output keeps the specification safe")


def letter(spec, I_r, O_r):
    """(I, O) letter of a valuation, evaluated exactly."""
    val = {k: v if isinstance(v, bool) else exact(v) for k, v in {**I_r, **O_r}.items()}
    bits = 0
    for i, n in enumerate(spec.letters):
        p = spec.predicates.get(n)
        if (p.holds(val) if p is not None else bool(val[n])):
            bits |= 1 << i
    return bits


# -- plants ---------------------------------------------------------------------

class Plant:
    """Generates inputs and nominal design outputs; ``advance`` feeds back emitted outputs."""

    closed_loop = False

    def __init__(self, spec, sim):
        self.spec = spec
        self.sim = sim
        self.dt = float(rational(sim.get("dt", 1)))
        self.chooser = Chooser(spec)
        self.clock = spec.spec.clock
        self.reset()

    def reset(self):
        self.chooser.reset()

    def inputs(self, k, t):
        raise NotImplementedError

    def design(self, k, t, I_r):
        raise NotImplementedError

    def corrupt(self, O_r, u):
        raise NotImplementedError

    def advance(self, emitted):
        pass

    def _with_clock(self, I_r, t):
        if self.clock:
            I_r[self.clock] = t
        return I_r


class Powertrain(Plant):
    """Open loop: scheduled engine modes, a stepping throttle and an air-fuel ratio error mu."""

    LEVELS = (0.15, 0.08, 0.04, 0.01, 0.0)

    def reset(self):
        super().reset()
        self.schedule = [(float(rational(t)), int(m)) for t, m in
                         self.sim.get("schedule", [[0, 0], [10, 1], [25, 0]])]
        self.throttle = 0.3

    def mode(self, t):
        m = self.schedule[0][1]
        for start, mode in self.schedule:
            if t + 1e-9 >= start:
                m = mode
        return m

    def inputs(self, k, t):
        I_r = {"l": self.mode(t)}
        if "da" in self.spec.spec.names(INPUT_REAL):
            # throttle steps every 4 s, alternating up and down
            prev = self.throttle
            if k and k % 40 == 0:
                self.throttle = 0.3 if self.throttle > 0.5 else 0.8
            I_r["da"] = round((self.throttle - prev) * 10, 6)
        return self._with_clock(I_r, t)

    def design(self, k, t, I_r):
        sign = 1.0 if math.sin(0.37 * k) >= 0 else -1.0
        return self.chooser.pick(I_r, [{"mu": sign * m} for m in self.LEVELS])

    def corrupt(self, O_r, u):
        sign = 1.0 if u[1] < 0.5 else -1.0
        return {"mu": sign * (0.22 + 0.2 * u[0])}


class WaterTank(Plant):
    """Closed loop: pump hysteresis between the low and high marks, rate-limited level."""

    closed_loop = True
    FILL = {"flow_in": 1.5, "flow_out": 0.0}
    DRAIN = {"flow_in": 0.0, "flow_out": 0.5}

    def reset(self):
        super().reset()
        self.level = float(rational(self.sim.get("level0", 50)))
        self.filling = True

    def inputs(self, k, t):
        return self._with_clock({"l": self.level}, t)

    def design(self, k, t, I_r):
        if self.level < 4:
            self.filling = True
        elif self.level > 93:
            self.filling = False
        return self.chooser.pick(I_r, [dict(self.FILL if self.filling else self.DRAIN)])

    def corrupt(self, O_r, u):
        return {"flow_in": round(3 * u[0], 6), "flow_out": round(3 * u[1], 6)}

    def advance(self, emitted):
        rate = 10 * (float(emitted["flow_in"]) - float(emitted["flow_out"]))
        self.level = min(100.0, max(0.0, self.level + min(15.0, max(-15.0, rate))))


class Driving(Plant):
    """Closed loop: ego approaching an intersection, adversary at constant speed."""

    closed_loop = True

    def reset(self):
        super().reset()
        self.y = float(rational(self.sim.get("y0", 16)))
        self.x = float(rational(self.sim.get("x0", 24.5)))
        self.v_adv = float(rational(self.sim.get("v_adv", 3)))
        self.v_s = float(self.spec.spec.constants.get("v_s", 2))

    def inputs(self, k, t):
        return self._with_clock({"y_ego": self.y, "x_adv": self.x}, t)

    def design(self, k, t, I_r):
        return self.chooser.pick(I_r, [{"v_ego": self.v_s}, {"v_ego": 0.0}])

    def corrupt(self, O_r, u):
        return {"v_ego": round(-1 + 6 * u[0], 6)}

    def advance(self, emitted):
        self.y -= float(emitted["v_ego"]) * self.dt
        self.x -= self.v_adv * self.dt


class Cruise(Plant):
    """Closed loop: gap to a lead vehicle that halts for a while."""

    closed_loop = True

    def reset(self):
        super().reset()
        self.gap = float(rational(self.sim.get("gap0", 30)))
        self.k = 0

    def lead(self, t):
        return 0.0 if 40 <= t < 50 else round(10 + 3 * math.sin(0.05 * t), 6)

    def inputs(self, k, t):
        self.k = k
        self.v_lead = self.lead(t)
        return self._with_clock({"gap": self.gap, "v_lead": self.v_lead}, t)

    def design(self, k, t, I_r):
        lo = 0.2 if self.v_lead > 0 else 0.0
        v = round(min(40.0, max(lo, self.v_lead + 0.5 * (self.gap - 20))), 6)
        slow = 0.5 if self.v_lead > 0 else 0.0
        return self.chooser.pick(I_r, [{"v_ego": v}, {"v_ego": slow}])

    def corrupt(self, O_r, u):
        return {"v_ego": round(-5 + 45 * u[0], 6)}

    def advance(self, emitted):
        self.gap = max(0.0, self.gap + (self.v_lead - float(emitted["v_ego"])) * self.dt)


PLANTS = {"powertrain": Powertrain, "water_tank": WaterTank, "driving": Driving, "cruise": Cruise}


def make_plant(spec):
    sim = spec.spec.simulation
    name = sim.get("plant")
    if name not in PLANTS:
        raise ValueError(f"spec {spec.spec.name!r} names no bundled plant ({name!r})")
    return PLANTS[name](spec, sim)


# -- simulation -------------------------------------------------------------------

@dataclass
class Record:
    step: int
    t: float
    inputs: dict
    design: dict        # O_r as produced (after error injection)
    emitted: dict       # O'_r
    provenance: str
    timings: dict
    state: int = 0
    letter: int = 0
    corrected: int = 0
    flagged: bool = False


@dataclass
class Simulation:
    spec: object
    records: list
    raw_inputs: list        # unshielded run: (I_r, O_r) per step
    metrics: dict = field(default_factory=dict)


class Monitor:
    """Spec automaton that counts unsafe moves and stays put after each one."""

    def __init__(self, spec):
        self.spec = spec
        self.table = spec.automaton.compile(spec.letters)
        self.unsafe = {spec.automaton.index(u) for u in spec.automaton.unsafe}
        self.state = spec.automaton.index(spec.automaton.init)
        self.violations = 0

    def feed(self, I_r, O_r):
        nxt = int(self.table[self.state, letter(self.spec, I_r, O_r)])
        if nxt < 0 or nxt in self.unsafe:
            self.violations += 1
            return False
        self.state = nxt
        return True


def count_violations(spec, pairs):
    m = Monitor(spec)
    for I_r, O_r in pairs:
        m.feed(I_r, O_r)
    return m.violations


def _run(spec, plant, steps, policy, runtime=None):
    hits, u = policy.draws(steps)
    script = {s: [] for s, _, _ in policy.script}
    for s, v, x in policy.script:
        script[s].append((v, x))
    plant.reset()
    out = []
    for k in range(steps):
        t = round(k * plant.dt, 9)
        I_r = plant.inputs(k, t)
        O_r = dict(plant.design(k, t, I_r))
        if hits[k]:
            O_r = plant.corrupt(O_r, u[k])
        for v, x in script.get(k, ()):
            O_r[v] = x
        if runtime is None:
            plant.advance(O_r)
            out.append((I_r, O_r))
            continue
        res = runtime.run_step(I_r, O_r)
        plant.advance(res.values)
        out.append(Record(k, t, I_r, O_r, res.values, res.provenance, res.timings,
                          res.state, res.letter, res.corrected, res.flagged))
    return out


def simulate(shield, spec, steps=1000, policy=None, mode=None, objective="robust", config=None):
    """Shielded run plus an unshielded twin under the same error draws."""
    policy = policy or ErrorPolicy()
    rt = Runtime(shield, spec, mode=mode, config=config, objective=objective)
    records = _run(spec, make_plant(spec), steps, policy, rt)
    raw = _run(spec, make_plant(spec), steps, policy)
    sim = Simulation(spec, records, raw)
    sim.metrics = metrics(sim, rt.config.history)
    return sim


def _quantiles(xs):
    if not xs:
        return {"n": 0, "median": None, "p99": None}
    a = np.asarray(xs)
    return {"n": len(xs), "median": float(np.median(a)), "p99": float(np.percentile(a, 99))}


def smoothness(records, variables, n):
    """Mean |v_i - mean of the previous n emitted values| over correction steps."""
    hist = {v: [] for v in variables}
    devs = []
    for r in records:
        for v in variables:
            x = float(r.emitted[v])
            prev = hist[v][-n:]
            if prev and r.provenance in (PREDICTED, SOLVED):
                devs.append(abs(x - sum(prev) / len(prev)))
            hist[v].append(x)
    return sum(devs) / len(devs) if devs else 0.0


def metrics(sim, n=5):
    recs = sim.records
    count = {p: sum(1 for r in recs if r.provenance == p) for p in (PASS, PREDICTED, SOLVED, FAILSAFE)}
    guessed = count[PREDICTED] + count[SOLVED]
    outs = sim.spec.spec.names(OUTPUT_REAL)
    return {
        "steps": len(recs),
        "violations_unshielded": count_violations(sim.spec, sim.raw_inputs),
        "violations_shielded": count_violations(sim.spec, [(r.inputs, r.emitted) for r in recs]),
        "corrections": guessed + count[FAILSAFE],
        "provenance": count,
        "hit_rate": count[PREDICTED] / guessed if guessed else None,
        "flagged": sum(1 for r in recs if r.flagged),
        "bool_us": _quantiles([r.timings["bool_us"] for r in recs]),
        "pred_us": _quantiles([r.timings["pred_us"] for r in recs if "pred_us" in r.timings]),
        "lp_us": _quantiles([r.timings["lp_us"] for r in recs if "lp_us" in r.timings]),
        "smoothness": smoothness(recs, outs, n),
    }


# -- CSV ---------------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def csv_columns(spec):
    s = spec.spec
    # a clock called t is the time column itself
    ins = [v for v in s.names(CLOCK, INPUT_REAL) if v != "t"]
    outs = s.names(OUTPUT_REAL, OUTPUT_BOOL)
    return ins, outs, ["step", "t", *ins, *outs, *(prime(o) for o in outs),
                       "provenance", "bool_us", "pred_us", "lp_us"]


def write_csv(sim, f, timings=True):
    ins, outs, header = csv_columns(sim.spec)
    w = csv.writer(f, lineterminator="\n")
    w.writerow(header)
    for r in sim.records:
        tm = [r.timings.get(k) if timings else None for k in ("bool_us", "pred_us", "lp_us")]
        w.writerow([r.step, _fmt(r.t), *(_fmt(r.inputs.get(v)) for v in ins),
                    *(_fmt(r.design.get(v)) for v in outs), *(_fmt(r.emitted.get(v)) for v in outs),
                    r.provenance, *(f"{x:.3f}" if x is not None else "" for x in tm)])


def csv_text(sim, timings=True):
    buf = io.StringIO()
    write_csv(sim, buf, timings)
    return buf.getvalue()


def read_csv(spec, f):
    """Rows of a trace CSV as (I_r, O_r, O'_r, provenance) with float values."""
    ins, outs, _ = csv_columns(spec)
    bools = set(spec.spec.names(OUTPUT_BOOL))
    rows = []
    for row in csv.DictReader(f):
        conv = lambda v, x: x == "1" if v in bools else float(x)
        I_r = {v: float(row[v]) for v in ins}
        if spec.spec.clock == "t":
            I_r["t"] = float(row["t"])
        rows.append((I_r, {v: conv(v, row[v]) for v in outs},
                     {v: conv(v, row[prime(v)]) for v in outs}, row["provenance"]))
    return rows
