"""Per-step shield execution on real-valued signals.

Each step abstracts the reals to Boolean letters, takes the shield transition
and, when the shield changed the output letter, computes real values for the
corrected predicates: a regression guess is tried first and an LP solve is the
fallback.  Values stay exact in strict mode; fast mode works on doubles and
re-checks a rejected guess exactly.
"""
import os
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .automata import assignment_of
from .engine import cases, check_sat, partition, solve_lp
from .errors import (ImpossibleInputObserved, Infeasible, MissingVariable,
                     RealizabilityError, Unbounded)
from .game import gen_correctness_monitor, preference
from .linear import Literal
from .spec import OUTPUT_BOOL, OUTPUT_REAL, RuntimeConfig

STRICT, FAST = "strict", "fast"
PASS, PREDICTED, SOLVED, FAILSAFE = "pass-through", "predicted", "lp-solved", "fail-safe"
PROVENANCE = (PASS, PREDICTED, SOLVED, FAILSAFE)


def default_mode():
    mode = os.environ.get("REALSHIELD_MODE", STRICT).strip().lower()
    if mode not in (STRICT, FAST):
        raise ValueError(f"REALSHIELD_MODE must be 'strict' or 'fast', not {mode!r}")
    return mode


def exact(x):
    """Exact rational of a number; floats keep their binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    return Fraction(x)


# -- building blocks ------------------------------------------------------------

def predict(samples, window=5, exact_mode=True):
    """One-step OLS extrapolation over the last ``window`` samples, or None with fewer than 2."""
    ys = list(samples)[-window:]
    n = len(ys)
    if n < 2:
        return None
    if exact_mode:
        ys = [exact(y) for y in ys]
        mean_x = Fraction(n - 1, 2)
        mean_y = sum(ys, Fraction(0)) / n
    else:
        ys = [float(y) for y in ys]
        mean_x = (n - 1) / 2
        mean_y = sum(ys) / n
    sxx = sum((k - mean_x) ** 2 for k in range(n))
    sxy = sum((k - mean_x) * (y - mean_y) for k, y in enumerate(ys))
    return mean_y + sxy / sxx * (n - mean_x)


def moving_average(samples, n):
    ys = [exact(y) for y in list(samples)[-n:]]
    return sum(ys, Fraction(0)) / len(ys) if ys else None


def validate(candidate, literals, predicates):
    """True iff each literal's predicate evaluates to its polarity at ``candidate``."""
    return all(predicates[l.pred].holds(candidate) == l.polarity for l in literals)


def _interval_midpoint(atoms, v, config):
    ends = []
    for sign in (1, -1):
        try:
            ends.append(solve_lp(atoms, None, config, secondary=[{v: sign}]).model[v])
        except Unbounded:
            ends.append(None)
    lo, hi = ends
    if lo is not None and hi is not None:
        return (lo + hi) / 2
    return lo if lo is not None else hi if hi is not None else Fraction(0)


def solve_correction(literals, predicates, targets, domain=None, config=None, objective="robust"):
    """Real values meeting ``literals`` as close as possible to ``targets`` ({var: value or None}).

    A target of None means no history: the midpoint of the variable's feasible
    interval is used instead.  ``objective="feasibility"`` drops the targets and
    returns any solver vertex (the baseline for smoothness comparisons).
    """
    config = config or RuntimeConfig().engine()
    forms = [predicates[l.pred].form(l.polarity) for l in sorted(literals)]
    variables = sorted(targets)
    dom = tuple(a for v in variables for a in (domain or {}).get(v, ()))
    best = None
    for case in cases(forms, config.dnf_budget):
        atoms = case + dom
        try:
            if objective == "feasibility":
                res = solve_lp(atoms, None, config)
            else:
                goal = dict(targets)
                if any(c is None for c in goal.values()):
                    goal = {v: _interval_midpoint(atoms, v, config) if c is None else c
                            for v, c in goal.items()}
                res = solve_lp(atoms, goal, config)
        except Infeasible:
            continue
        if best is None or res.objective < best.objective:
            best = res
            if objective == "feasibility" or not res.objective:
                break
    if best is None:
        raise RealizabilityError("no real values realize the corrected output letter "
                                 + " & ".join(map(str, sorted(literals))))
    return {v: best.model.get(v, Fraction(0)) for v in variables}


class _FloatPredicate:
    """Predicate evaluator on doubles; ``tol`` widens every comparison."""

    def __init__(self, pred, tol=0.0):
        self.atoms = [(tuple((v, float(c)) for v, c in a.coeffs), a.rel, float(a.bound))
                      for a in pred.positive]
        self.tol = tol

    def holds(self, val):
        t = self.tol
        for coeffs, rel, b in self.atoms:
            x = 0.0
            for v, c in coeffs:
                x += c * val[v]
            if rel == "<":
                ok = x < b + t
            elif rel == "<=":
                ok = x <= b + t
            elif rel == ">":
                ok = x > b - t
            elif rel == ">=":
                ok = x >= b - t
            else:
                ok = abs(x - b) <= t
            if not ok:
                return False
        return True


class _ExactPredicate:
    def __init__(self, pred):
        self.pred = pred

    def holds(self, val):
        return self.pred.holds({v: exact(val[v]) for v in self.pred.variables})


@dataclass
class StepResult:
    values: dict                    # O'_r, including Boolean outputs
    inputs: int                     # I letter
    outputs: int                    # O letter
    corrected: int                  # O' letter
    provenance: str
    state: int                      # shield state before the step
    next_state: int
    timings: dict = field(default_factory=dict)
    flagged: bool = False
    n_in: int = 0

    @property
    def letter(self):
        """The (I, O) letter the shield read."""
        return self.inputs | self.outputs << self.n_in


@dataclass
class _Group:
    preds: tuple                    # output predicate ids
    variables: tuple                # real output variables they read
    bits: tuple                     # positions in the O letter


class Runtime:
    """Stateful shield executor; one step at a time."""

    def __init__(self, shield, spec, mode=None, config=None, objective="robust", tol=0.0):
        self.shield = shield
        self.spec = spec
        self.mode = mode or default_mode()
        self.config = config or spec.spec.runtime
        self.engine = self.config.engine()
        self.objective = objective
        s = spec.spec
        self.real_outputs = tuple(s.names(OUTPUT_REAL))
        self.bool_outputs = tuple(s.names(OUTPUT_BOOL))
        self.n_in, self.n_out = len(spec.inputs), len(spec.outputs)
        self.domain = s.domain()
        preds = spec.predicates
        make = (lambda p: _FloatPredicate(p, tol)) if self.mode == FAST else _ExactPredicate
        self._eval_in = [(preds[n].variables, make(preds[n])) if n in preds else (None, n)
                         for n in spec.inputs]
        self._eval_out = [(preds[n].variables, make(preds[n])) if n in preds else (None, n)
                          for n in spec.outputs]
        out_preds = {n: preds[n] for n in spec.outputs if n in preds}
        pos = {n: i for i, n in enumerate(spec.outputs)}
        self.groups = []
        for g in partition(out_preds):
            ids = tuple(n for n in spec.outputs if n in g)
            vs = tuple(sorted(set().union(*(preds[n].variables for n in ids))))
            self.groups.append(_Group(ids, vs, tuple(pos[n] for n in ids)))
        self._float_preds = {n: _FloatPredicate(preds[n]) for n in out_preds}
        conv = float if self.mode == FAST else (lambda q: q)
        self._ranges = {v.name: tuple(None if b is None else conv(b) for b in v.range)
                        for v in s.variables if v.kind == OUTPUT_REAL}
        self._next = shield.next.tolist()
        self._out = shield.out.tolist()
        self._pref = None
        self._q = None
        self.reset()

    def reset(self):
        self.state = self.shield.init
        size = max(self.config.history, self.config.window)
        self.history = {v: deque(maxlen=size) for v in self.real_outputs}
        self.last = None
        self.steps = 0

    # -- Boolean layer ------------------------------------------------------

    def _bits(self, evals, val):
        bits = 0
        for i, (vs, ev) in enumerate(evals):
            if vs is None:
                hit = bool(val[ev])
            else:
                hit = ev.holds(val)
            if hit:
                bits |= 1 << i
        return bits

    def abstract_inputs(self, I_r, O_r):
        """Boolean letters (I, O) of a real valuation."""
        val = dict(I_r)
        val.update(O_r)
        for vs, ev in self._eval_in + self._eval_out:
            for v in (vs if vs is not None else (ev,)):
                if v not in val:
                    raise MissingVariable(f"no value for variable {v!r}")
        return self._bits(self._eval_in, val), self._bits(self._eval_out, val)

    def abstract_outputs(self, values):
        return self._bits(self._eval_out, values)

    def step_letter(self, state, letter):
        """Shield transition; raises ImpossibleInputObserved on a don't-care letter."""
        nxt = self._next[state][letter]
        if nxt < 0:
            raise ImpossibleInputObserved(
                f"letter {assignment_of(letter, self.spec.letters)} cannot occur in state "
                f"{self.shield.names[state]}")
        return nxt, self._out[state][letter]

    # -- real layer ---------------------------------------------------------

    def _literals(self, group, p):
        return [Literal(n, bool(p >> b & 1)) for n, b in zip(group.preds, group.bits)]

    def _targets(self, variables):
        n = self.config.history
        return {v: moving_average(self.history[v], n) for v in variables}

    def _correct(self, p, o, O_r, timings):
        """Real values for letter ``p``; groups whose literals are unchanged keep O_r."""
        values = {v: O_r[v] for v in self.real_outputs}
        solved = False
        preds = self.spec.predicates
        for g in self.groups:
            mask = sum(1 << b for b in g.bits)
            if p & mask == o & mask:
                continue
            lits = self._literals(g, p)
            t0 = time.perf_counter_ns()
            cand = self._predict(g, lits)
            timings["pred_us"] = timings.get("pred_us", 0.0) + (time.perf_counter_ns() - t0) / 1e3
            if cand is None:
                t0 = time.perf_counter_ns()
                sol = solve_correction(lits, preds, self._targets(g.variables), self.domain,
                                       self.engine, self.objective)
                timings["lp_us"] = timings.get("lp_us", 0.0) + (time.perf_counter_ns() - t0) / 1e3
                if self.mode == FAST:
                    sol = {v: float(x) for v, x in sol.items()}
                cand = sol
                solved = True
            values.update(cand)
        return values, solved

    def _in_range(self, v, x):
        lo, hi = self._ranges.get(v, (None, None))
        return (lo is None or x >= lo) and (hi is None or x <= hi)

    def _predict(self, g, lits):
        w = self.config.window
        fast = self.mode == FAST
        cand = {}
        for v in g.variables:
            x = predict(self.history[v], w, not fast)
            if x is None or not self._in_range(v, x):
                return None
            cand[v] = x
        preds = self.spec.predicates
        if fast:
            ok = all(self._float_preds[l.pred].holds(cand) == l.polarity for l in lits)
            if not ok:
                # a double comparison may have been wrong near a boundary
                ok = validate({v: exact(x) for v, x in cand.items()}, lits, preds)
        else:
            ok = validate(cand, lits, preds)
        return cand if ok else None

    def _emit(self, values, p):
        for i, v in enumerate(self.spec.outputs):
            if v in self.bool_outputs:
                values[v] = bool(p >> i & 1)
        for v in self.real_outputs:
            self.history[v].append(values[v])
        self.last = values

    # -- fail-safe ----------------------------------------------------------

    def _failsafe(self, a, O_r, timings):
        """HD-minimal feasible O' letter keeping Q safe; hold the last output otherwise."""
        spec = self.spec
        if self._q is None:
            Q = gen_correctness_monitor(spec)
            self._q = (Q, Q.compile(spec.inputs + spec.primed), {Q.index(u) for u in Q.unsafe})
            self._pref = preference(self.n_out)
            self._feasible = {}
        Q, qt, unsafe = self._q
        i_bits = a & ((1 << self.n_in) - 1)
        o = a >> self.n_in
        comps = self.shield.components
        q = Q.index(comps[self.state][0])
        pp = spec.primed_predicates()
        for p in np.argsort(self._pref[o]).tolist():
            q2 = int(qt[q, i_bits | p << self.n_in])
            if q2 < 0 or q2 in unsafe:
                continue
            if p not in self._feasible:
                lits = [Literal(n, bool(p >> i & 1)) for i, n in enumerate(spec.primed) if n in pp]
                self._feasible[p] = not lits or check_sat(lits, pp, self.engine,
                                                          spec.domain(primed=True)).sat
            if not self._feasible[p]:
                continue
            targets = [s for s, c in enumerate(comps) if c[0] == Q.states[q2]]
            if not targets:
                continue
            values, _ = self._correct(p, o, O_r, timings)
            return p, targets[0], values, False
        values = dict(self.last) if self.last else {v: O_r[v] for v in self.real_outputs}
        return o, self.state, values, True

    # -- main loop ----------------------------------------------------------

    def run_step(self, I_r, O_r):
        """One shield step on real inputs and design outputs."""
        timings = {}
        t0 = time.perf_counter_ns()
        i_bits, o = self.abstract_inputs(I_r, O_r)
        timings["abs_us"] = (time.perf_counter_ns() - t0) / 1e3
        a = i_bits | o << self.n_in
        state = self.state
        t0 = time.perf_counter_ns()
        nxt = self._next[state][a]
        p = self._out[state][a]
        timings["bool_us"] = (time.perf_counter_ns() - t0) / 1e3
        flagged = False
        if nxt < 0:
            p, nxt, values, flagged = self._failsafe(a, O_r, timings)
            prov = FAILSAFE
        elif p == o:
            values = {v: O_r[v] for v in self.real_outputs}
            prov = PASS
        else:
            values, solved = self._correct(p, o, O_r, timings)
            prov = SOLVED if solved else PREDICTED
        self._emit(values, p)
        self.state = nxt
        self.steps += 1
        return StepResult(values, i_bits, o, p, prov, state, nxt, timings, flagged, self.n_in)
