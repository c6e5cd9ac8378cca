"""Safety games, monitors, relaxation/feasibility constraints and shield extraction."""
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .automata import (MONITOR, SafetyAutomaton, assignment_of, automaton_from_table,
                       relabel)
from .engine import check_sat, infeasible_cubes
from .errors import UnrealizableSpec
from .linear import Literal
from .spec import AbstractSpec, CLOCK, INPUT_REAL, OUTPUT_REAL, prime

VIOLATED = "V"


@dataclass
class SafetyGame:
    """Explicit game: ``succ[s, a, p]`` is the successor under antagonist letter
    ``a`` (over ``ant_vars``) and protagonist letter ``p`` (over ``pro_vars``)."""

    names: list
    succ: np.ndarray
    unsafe: np.ndarray
    init: int = 0
    ant_vars: tuple = ()
    pro_vars: tuple = ()
    components: list = None

    @property
    def n(self):
        return len(self.names)

    def check(self):
        assert self.succ.shape == (self.n, 1 << len(self.ant_vars), 1 << len(self.pro_vars))
        assert (self.succ >= 0).all() and (self.succ < self.n).all(), "succ must be total"
        for u in np.flatnonzero(self.unsafe):
            assert self.unsafe[self.succ[u]].all(), f"unsafe state {self.names[u]} escapes"


@dataclass
class WinningRegion:
    win: np.ndarray                 # bool per state
    rank: np.ndarray                # round in which a state was lost; -1 when winning

    def allowed(self, game, state, letter):
        return np.flatnonzero(self.win[game.succ[state, letter]])

    def __contains__(self, state):
        return bool(self.win[state])


def solve_safety_game(game):
    """Greatest fixpoint of the controllable predecessor over the safe states."""
    win = ~game.unsafe.copy()
    rank = np.where(game.unsafe, 0, -1)
    k = 0
    while True:
        k += 1
        stay = win[game.succ]                   # (n, nA, nP)
        good = stay.any(axis=2).all(axis=1)
        lost = win & ~good
        if not lost.any():
            return WinningRegion(win, rank)
        rank[lost] = k
        win = win & good


def counterexample(game, region, limit=None):
    """Antagonist play from the initial state forcing a loss, as (state, letter) pairs."""
    path = []
    s = game.init
    limit = limit or game.n + 1
    while not game.unsafe[s] and len(path) < limit:
        k = region.rank[s]
        ranks = region.rank[game.succ[s]]                # (nA, nP)
        earlier = ((ranks >= 0) & (ranks < k)).all(axis=1)
        a = int(np.flatnonzero(earlier)[0])
        p = int(np.argmin(ranks[a]))
        path.append((game.names[s], a))
        s = int(game.succ[s, a, p])
    return path


# -- monitors -----------------------------------------------------------------

def gen_correctness_monitor(spec):
    """The spec automaton read over (I, O')."""
    return relabel(spec.automaton, dict(zip(spec.outputs, spec.primed)))


def gen_error_avoiding_monitor(spec):
    """Spec automaton over (I, O) with unsafe entries redirected to a latched violation state."""
    a = spec.automaton
    unsafe = a.unsafe
    states = tuple(s for s in a.states if s not in unsafe) + (VIOLATED,)
    trans = [(s, g, VIOLATED if d in unsafe else d) for s, g, d in a.transitions if s not in unsafe]
    trans.append((VIOLATED, ((),), VIOLATED))
    init = VIOLATED if a.init in unsafe else a.init
    return SafetyAutomaton(states, init, a.variables, tuple(trans), frozenset(), MONITOR)


def _reachable(succ, init):
    seen = np.zeros(succ.shape[0], dtype=bool)
    seen[init] = True
    frontier = np.array([init])
    while len(frontier):
        nxt = np.unique(succ[frontier])
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return np.flatnonzero(seen)


def _renumber(succ, keep, init):
    remap = np.full(succ.shape[0], -1, dtype=np.int64)
    order = [init] + [int(k) for k in keep if k != init]
    remap[order] = np.arange(len(order))
    return remap[succ[order]], order


def build_game(Q, E, spec):
    """Synchronous product of Q (over I, O') and E (over I, O); unsafe where Q is."""
    nI, nO = len(spec.inputs), len(spec.outputs)
    qt = Q.compile(spec.inputs + spec.primed)
    et = E.compile(spec.inputs + spec.outputs)
    nA, nP = 1 << (nI + nO), 1 << nO
    A = np.arange(nA)
    P = np.arange(nP)
    qletter = (A & ((1 << nI) - 1))[:, None] | (P << nI)[None, :]
    nQ, nE = len(Q.states), len(E.states)
    qpart = qt[:, qletter]                                  # (nQ, nA, nP)
    full = qpart[:, None] * nE + et[None, :, :, None]       # (nQ, nE, nA, nP)
    full = full.reshape(nQ * nE, nA, nP)
    init = Q.index(Q.init) * nE + E.index(E.init)
    keep = _reachable(full, init)
    succ, order = _renumber(full, keep, init)
    comps = [(Q.states[i // nE], E.states[i % nE]) for i in order]
    unsafe = np.array([q in Q.unsafe for q, _ in comps])
    return SafetyGame([f"{q}|{e}" for q, e in comps], succ, unsafe, 0,
                      spec.inputs + spec.outputs, spec.primed, comps)


# -- relaxation and feasibility --------------------------------------------------

IMPOSSIBLE = "impossible"


def _pred_domain(spec):
    return spec.domain()


def _cube_letters(cubes, order):
    """Bool array over letters of ``order`` marking letters covering some cube."""
    hit = np.zeros(1 << len(order), dtype=bool)
    letters = np.arange(1 << len(order))
    pos = {v: i for i, v in enumerate(order)}
    for c in cubes:
        mask = val = 0
        for lit in c:
            mask |= 1 << pos[lit.pred]
            if lit.polarity:
                val |= 1 << pos[lit.pred]
        hit |= (letters & mask) == val
    return hit


def clock_regions(spec):
    """Thresholds of the clock predicates and the predicates' truth per region.

    Regions alternate open intervals and points: (-inf, c1), [c1], (c1, c2), ...
    """
    clock = spec.spec.clock
    preds = [spec.predicates[p] for p in spec.clock_predicates]
    cuts = sorted({a.bound / a.coeffs[0][1] for p in preds for a in p.positive})
    reps = []
    for i, c in enumerate(cuts):
        reps.append(c - 1 if i == 0 else (cuts[i - 1] + c) / 2)
        reps.append(c)
    reps.append(cuts[-1] + 1 if cuts else 0)
    truth = {p.id: [p.holds({clock: r}) for r in reps] for p in preds}
    return cuts, reps, truth


def region_of(value, cuts):
    for j, c in enumerate(cuts):
        if value < c:
            return 2 * j
        if value == c:
            return 2 * j + 1
    return 2 * len(cuts)


@dataclass
class Relaxation:
    automaton: SafetyAutomaton      # over I + O, unsafe = {impossible}
    table: np.ndarray               # (nR, nA) successor; IMPOSSIBLE index = impossible
    impossible: int
    cubes: set                      # minimal infeasible cubes over I and O predicates
    letter_infeasible: np.ndarray   # (nA,) letters covering an infeasible cube


def gen_relaxation_automaton(spec, config=None, cubes=None):
    """R(I, O): infeasible predicate combinations, clock monotonicity and user physics."""
    config = config or spec.spec.runtime.engine()
    order = spec.inputs + spec.outputs
    nA = 1 << len(order)
    if cubes is None:
        cubes = infeasible_cubes(spec.predicates, config, _pred_domain(spec))
    bad = _cube_letters(cubes, order)
    # clock: per-letter set of consistent regions
    letters = np.arange(nA)
    if spec.clock_predicates:
        cuts, reps, truth = clock_regions(spec)
        nreg = len(reps)
        consistent = np.ones((nA, nreg), dtype=bool)
        for pid in spec.clock_predicates:
            bit = (letters >> order.index(pid)) & 1
            consistent &= np.array(truth[pid])[None, :] == bit[:, None].astype(bool)
        lo = spec.spec.variable(spec.spec.clock).range[0]
        start = 0 if lo is None else region_of(lo, cuts)
    else:
        nreg, consistent, start = 1, np.ones((nA, 1), dtype=bool), 0
    phys = spec.physics
    ptab = phys.compile(order) if phys else np.zeros((1, nA), dtype=np.int64)
    punsafe = {phys.index(u) for u in phys.unsafe} if phys else set()
    pinit = phys.index(phys.init) if phys else 0

    names, index, rows = [], {}, []
    queue = deque()

    def state(c, ph):
        key = (c, ph)
        if key not in index:
            index[key] = len(names)
            label = f"c{c}" if spec.clock_predicates else "r"
            if phys:
                label += f"/{phys.states[ph]}"
            names.append(label)
            queue.append(key)
        return index[key]

    state(start, pinit)
    while queue:
        c, ph = queue.popleft()
        row = np.full(nA, -1, dtype=np.int64)
        for a in range(nA):
            if bad[a]:
                continue
            regs = np.flatnonzero(consistent[a, c:])
            if not len(regs):
                continue
            ph2 = int(ptab[ph, a])
            if ph2 < 0 or ph2 in punsafe:
                continue
            row[a] = state(c + int(regs[0]), ph2)
        rows.append(row)
    imp = len(names)
    names.append(IMPOSSIBLE)
    table = np.array(rows + [np.full(nA, imp)], dtype=np.int64)
    table[table < 0] = imp
    auto = automaton_from_table(names, 0, order, table, {IMPOSSIBLE}, "relaxation")
    return Relaxation(auto, table, imp, set(cubes), bad)


@dataclass
class Feasibility:
    automaton: SafetyAutomaton      # over O', unsafe = {infeasible}
    feasible: np.ndarray            # (nP,)
    cubes: set                      # minimal infeasible cubes over primed predicates


def gen_feasibility_automaton(spec, config=None, cubes=None):
    """F(O'): routes every primed letter covering an infeasible cube to a trap."""
    config = config or spec.spec.runtime.engine()
    pp = spec.primed_predicates()
    if cubes is None:
        cubes = infeasible_cubes(pp, config, spec.domain(primed=True))
    bad = _cube_letters(cubes, spec.primed)
    table = np.array([np.where(bad, 1, 0), np.ones(len(bad), dtype=np.int64)])
    auto = automaton_from_table(["ok", "infeasible"], 0, spec.primed, table, {"infeasible"},
                                "feasibility")
    return Feasibility(auto, ~bad, set(cubes))


def prime_cubes(cubes):
    return {frozenset(Literal(prime(l.pred), l.polarity) for l in c) for c in cubes}


# -- constrained game ---------------------------------------------------------

DONTCARE, LOST = "dontcare", "lost"


def compose_constrained_game(game, region, relax, feas):
    """Product of W (with an unsafe sink), R and F.

    Safe states satisfy (not W-sink and not infeasible) or impossible.  All
    impossible states collapse into one safe trap and every unsafe product
    state into one unsafe trap.
    """
    nA, nP = game.succ.shape[1:]
    names, comps, index, rows = [], [], {}, []
    queue = deque()

    def state(w, r):
        if (w, r) not in index:
            index[(w, r)] = len(names)
            names.append(f"{game.names[w]}|{relax.automaton.states[r]}|ok")
            comps.append(tuple(game.components[w]) + (relax.automaton.states[r], "ok")
                         if game.components else (game.names[w], relax.automaton.states[r], "ok"))
            queue.append((w, r))
        return index[(w, r)]

    state(game.init, 0)
    nR = len(relax.automaton.states)
    pending = []
    while queue:
        w, r = queue.popleft()
        succ = game.succ[w]                                  # (nA, nP)
        rnext = relax.table[r]                               # (nA,)
        ok = region.win[succ] & feas.feasible[None, :]
        keys = succ * nR + rnext[:, None]
        uniq, inverse = np.unique(keys[ok], return_inverse=True)
        ids = np.array([state(int(k) // nR, int(k) % nR) for k in uniq], dtype=np.int64)
        row = np.full((nA, nP), -2, dtype=np.int64)
        row[ok] = ids[inverse] if len(ids) else -2
        row[rnext == relax.impossible] = -1                  # don't care
        pending.append(row)
    n = len(names)
    dc, lost = n, n + 1
    succ = np.array(pending + [np.full((nA, nP), -1), np.full((nA, nP), -2)], dtype=np.int64)
    succ[succ == -1] = dc
    succ[succ == -2] = lost
    names += [DONTCARE, LOST]
    comps += [(DONTCARE,), (LOST,)]
    unsafe = np.zeros(n + 2, dtype=bool)
    unsafe[lost] = True
    return SafetyGame(names, succ, unsafe, 0, game.ant_vars, game.pro_vars, comps)


def trivial_relaxation(spec):
    order = spec.inputs + spec.outputs
    nA = 1 << len(order)
    table = np.array([np.zeros(nA, dtype=np.int64), np.ones(nA, dtype=np.int64)])
    auto = automaton_from_table(["r", IMPOSSIBLE], 0, order, table, {IMPOSSIBLE}, "relaxation")
    return Relaxation(auto, table, 1, set(), np.zeros(nA, dtype=bool))


def trivial_feasibility(spec):
    nP = 1 << len(spec.primed)
    table = np.array([np.zeros(nP, dtype=np.int64), np.ones(nP, dtype=np.int64)])
    auto = automaton_from_table(["ok", "infeasible"], 0, spec.primed, table, {"infeasible"},
                                "feasibility")
    return Feasibility(auto, np.ones(nP, dtype=bool), set())


# -- strategy and shield ---------------------------------------------------------

def preference(n_out):
    """rank[o, p]: position of p in the order (Hamming distance to o, then O' bits lexicographically)."""
    nP = 1 << n_out
    rank = np.empty((nP, nP), dtype=np.int64)
    for o in range(nP):
        keyed = sorted(range(nP), key=lambda p: (bin(o ^ p).count("1"),
                                                 tuple(p >> i & 1 for i in range(n_out))))
        rank[o, keyed] = np.arange(nP)
    return rank


def extract_strategy(game, region, n_in, n_out):
    """strategy[s, a] = HD-minimal allowed protagonist letter (-1 outside W)."""
    nA, nP = game.succ.shape[1:]
    rank = preference(n_out)
    a_out = np.arange(nA) >> n_in
    pref = rank[a_out]                                    # (nA, nP)
    big = nP + 1
    strat = np.full((game.n, nA), -1, dtype=np.int64)
    for s in np.flatnonzero(region.win):
        allowed = region.win[game.succ[s]]
        masked = np.where(allowed, pref, big)
        strat[s] = np.argmin(masked, axis=1)
    return strat


@dataclass
class MealyShield:
    names: list
    components: list
    next: np.ndarray                # (nS, nA); -1 for impossible letters
    out: np.ndarray                 # (nS, nA) primed letters
    inputs: tuple
    outputs: tuple
    primed: tuple
    game_index: list = None         # shield state -> constrained game state
    skip_rf: bool = False
    init: int = 0

    @property
    def n(self):
        return len(self.names)

    def step(self, state, letter):
        return int(self.next[state, letter]), int(self.out[state, letter])

    def io_letter(self, assignment):
        bits = 0
        for i, v in enumerate(self.inputs + self.outputs):
            if assignment[v]:
                bits |= 1 << i
        return bits


def extract_shield(game, region, strategy, spec, skip_rf=False, dontcare=None):
    """Mealy machine over the states reachable under ``strategy`` (don't-care letters map to -1)."""
    order, index = [], {}
    queue = deque([game.init])
    index[game.init] = 0
    order.append(game.init)
    letters = np.arange(game.succ.shape[1])
    while queue:
        s = queue.popleft()
        for t in dict.fromkeys(game.succ[s, letters, strategy[s]].tolist()):
            if t == dontcare or t in index:
                continue
            index[t] = len(order)
            order.append(t)
            queue.append(t)
    nA = game.succ.shape[1]
    letters = np.arange(nA)
    remap = np.full(game.n, -1, dtype=np.int64)
    remap[order] = np.arange(len(order))
    nxt = np.empty((len(order), nA), dtype=np.int64)
    out = np.empty((len(order), nA), dtype=np.int64)
    for i, s in enumerate(order):
        out[i] = strategy[s]
        nxt[i] = remap[game.succ[s, letters, strategy[s]]]
    return MealyShield([game.names[s] for s in order], [game.components[s] for s in order],
                       nxt, out, spec.inputs, spec.outputs, spec.primed, order, skip_rf)


# -- audit --------------------------------------------------------------------

def primed_literals(spec, letter):
    """Literals over primed predicates selected by an O' letter (Boolean outputs skipped)."""
    pp = spec.primed_predicates()
    return frozenset(Literal(v, bool(letter >> i & 1)) for i, v in enumerate(spec.primed) if v in pp)


def check_realizable(shield, spec, config=None, relax=None):
    """Walk reachable (shield state, possible input letter) pairs; report infeasible outputs."""
    config = config or spec.spec.runtime.engine()
    relax = relax or gen_relaxation_automaton(spec, config)
    pp = spec.primed_predicates()
    dom = spec.domain(primed=True)
    cache = {}

    def feasible(p):
        if p not in cache:
            lits = primed_literals(spec, p)
            cache[p] = (not lits) or check_sat(lits, pp, config, dom).sat
        return cache[p]

    violations = []
    seen = {(shield.init, 0)}
    queue = deque(seen)
    order = shield.inputs + shield.outputs
    while queue:
        s, r = queue.popleft()
        for a in range(shield.next.shape[1]):
            r2 = int(relax.table[r, a])
            if r2 == relax.impossible:
                continue
            t, p = int(shield.next[s, a]), int(shield.out[s, a])
            if t < 0:
                violations.append({"state": shield.names[s], "input": assignment_of(a, order),
                                   "output": None, "reason": "no transition"})
                continue
            if not feasible(p):
                violations.append({"state": shield.names[s], "input": assignment_of(a, order),
                                   "output": assignment_of(p, shield.primed),
                                   "reason": "infeasible output"})
            if (t, r2) not in seen:
                seen.add((t, r2))
                queue.append((t, r2))
    return violations


# -- pipeline -----------------------------------------------------------------

@dataclass
class SynthesisResult:
    spec: AbstractSpec
    game: SafetyGame
    region: WinningRegion
    relax: Relaxation
    feas: Feasibility
    constrained: SafetyGame
    constrained_region: WinningRegion
    strategy: np.ndarray
    shield: MealyShield
    report: dict = field(default_factory=dict)

    def smaller_hd_moves(self, shield_state, letter):
        """Protagonist letters closer to O than the chosen one that keep the play winning."""
        g = self.shield.game_index[shield_state]
        chosen = int(self.strategy[g, letter])
        o = letter >> len(self.spec.inputs)
        d = bin(o ^ chosen).count("1")
        allowed = self.constrained_region.allowed(self.constrained, g, letter)
        return [int(p) for p in allowed if bin(o ^ int(p)).count("1") < d]


def synthesize(spec, skip_rf=False, config=None):
    """Full pipeline from an abstract spec to a Mealy shield (raises UnrealizableSpec)."""
    t0 = time.perf_counter()
    config = config or spec.spec.runtime.engine()
    Q = gen_correctness_monitor(spec)
    E = gen_error_avoiding_monitor(spec)
    game = build_game(Q, E, spec)
    region = solve_safety_game(game)
    if not region.win[game.init]:
        raise UnrealizableSpec("the specification cannot be enforced from its initial state",
                               _describe(game, counterexample(game, region), spec))
    if skip_rf:
        relax, feas = trivial_relaxation(spec), trivial_feasibility(spec)
    else:
        io_cubes = infeasible_cubes(spec.predicates, config, spec.domain())
        relax = gen_relaxation_automaton(spec, config, io_cubes)
        out_cubes = {c for c in io_cubes if all(l.pred in spec.outputs for l in c)}
        feas = gen_feasibility_automaton(spec, config, prime_cubes(out_cubes))
    gr = compose_constrained_game(game, region, relax, feas)
    region_r = solve_safety_game(gr)
    if not region_r.win[gr.init]:
        raise UnrealizableSpec("no realizable shield: every strategy is eventually forced into "
                               "an infeasible output", _describe(gr, counterexample(gr, region_r), spec))
    strategy = extract_strategy(gr, region_r, len(spec.inputs), len(spec.outputs))
    shield = extract_shield(gr, region_r, strategy, spec, skip_rf, gr.names.index(DONTCARE))
    elapsed = time.perf_counter() - t0
    report = synthesis_report(spec, game, region, relax, feas, gr, region_r, shield, elapsed)
    return SynthesisResult(spec, game, region, relax, feas, gr, region_r, strategy, shield, report)


def _describe(game, path, spec):
    order = spec.inputs + spec.outputs
    return [{"state": s, "input": assignment_of(a, order)} for s, a in path]


def synthesis_report(spec, game, region, relax, feas, gr, region_r, shield, elapsed):
    s = spec.spec
    user = [p for p in spec.predicates if p not in spec.generated]
    return {
        "name": s.name,
        "spec_states": len(spec.automaton.states),
        "I_r": len(s.names(INPUT_REAL, CLOCK)),
        "O_r": len(s.names(OUTPUT_REAL)),
        "P_I": sum(1 for p in user if p in spec.inputs),
        "P_O": sum(1 for p in user if p in spec.outputs),
        "I": len(spec.inputs),
        "O": len(spec.outputs),
        "R_conflicts": len(relax.cubes),
        "F_conflicts": len(feas.cubes),
        "game_states": game.n,
        "winning_states": int(region.win.sum()),
        "constrained_states": gr.n,
        "constrained_winning": int(region_r.win.sum()),
        "shield_states": shield.n,
        "skip_rf": shield.skip_rf,
        "time_s": round(elapsed, 4),
    }

