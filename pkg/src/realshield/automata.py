"""Safety automata over Boolean alphabets with DNF guards.

A cube is a sorted tuple of ``(variable, value)`` pairs; a guard is a tuple of
cubes (their disjunction).  ``()`` as a guard is false, ``((),)`` is true.
Letters are full assignments; compiled tables index them as integers where
bit ``i`` carries the ``i``-th variable of a chosen order.
"""
import itertools
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (GuardSyntaxError, IncompleteAutomaton, MappingCollision,
                     NondeterministicInput)

TRUE = ((),)
FALSE = ()

SPEC, WINNING, RELAXATION, FEASIBILITY, MONITOR = (
    "spec", "winning-region", "relaxation", "feasibility", "monitor")
TRAP_TAGS = {SPEC, RELAXATION, FEASIBILITY}


# -- cubes and guards ---------------------------------------------------------

def cube(assignment):
    return tuple(sorted(dict(assignment).items()))


def cube_and(a, b):
    """Conjunction of two cubes, or None when they clash."""
    merged = dict(a)
    for v, x in b:
        if merged.get(v, x) != x:
            return None
        merged[v] = x
    return tuple(sorted(merged.items()))


def cube_holds(c, assignment):
    return all(assignment[v] == x for v, x in c)


def cubes_overlap(a, b):
    return cube_and(a, b) is not None


def guard_holds(guard, assignment):
    return any(cube_holds(c, assignment) for c in guard)


def guard_variables(guard):
    return sorted({v for c in guard for v, _ in c})


def simplify(guard):
    """Drop duplicate cubes and cubes subsumed by a more general one."""
    cubes = sorted(set(guard), key=lambda c: (len(c), c))
    kept = []
    for c in cubes:
        cs = set(c)
        if not any(set(k) <= cs for k in kept):
            kept.append(c)
    return tuple(sorted(kept))


def guard_or(*guards):
    return simplify(tuple(c for g in guards for c in g))


def guard_and(*guards):
    acc = TRUE
    for g in guards:
        acc = tuple(c for c in (cube_and(a, b) for a in acc for b in g) if c is not None)
        acc = simplify(acc)
    return acc


def cubes_from_function(variables, fn, fixed=()):
    """Cover of ``{x : fn(x)}`` over ``variables`` by Shannon splitting.

    ``fn`` receives a dict assignment of all ``variables``.  Each returned cube
    is exact (every completion satisfies ``fn``) and cubes are disjoint.
    """
    variables = list(variables)
    out = []

    def rec(prefix, rest):
        values = set()
        for bits in itertools.product((False, True), repeat=len(rest)):
            a = dict(prefix)
            a.update(zip(rest, bits))
            values.add(bool(fn(a)))
            if len(values) > 1:
                break
        if values == {True}:
            out.append(cube(prefix))
            return
        if values == {False}:
            return
        v = rest[0]
        for x in (False, True):
            rec(prefix + ((v, x),), rest[1:])

    rec(tuple(fixed), variables)
    return simplify(tuple(out))


def guard_not(guard):
    vs = guard_variables(guard)
    if not vs:
        return FALSE if guard else TRUE
    return cubes_from_function(vs, lambda a: not guard_holds(guard, a))


def guard_rename(guard, mapping):
    return tuple(sorted(cube({mapping.get(v, v): x for v, x in c}) for c in guard))


def cube_str(c):
    return " & ".join(v if x else f"!{v}" for v, x in c) or "true"


def guard_str(guard):
    if not guard:
        return "false"
    if guard == TRUE:
        return "true"
    parts = [cube_str(c) for c in guard]
    if len(parts) == 1:
        return parts[0]
    return " | ".join(f"({p})" if len(c) > 1 else p for p, c in zip(parts, guard))


_GTOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*'?)|(&&|\|\||[&|!~()]))")


def parse_guard(text, variables=None):
    """Parse ``&``, ``|``, ``!`` (or ``~``), parentheses, ids, ``true``/``false`` into DNF."""
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _GTOKEN.match(text, pos)
        if not m:
            raise GuardSyntaxError(f"unexpected character at offset {pos} in {text!r}")
        name, op = m.groups()
        toks.append(("id", name) if name else ("op", {"&&": "&", "||": "|", "~": "!"}.get(op, op)))
        pos = m.end()
    i = 0

    def peek():
        return toks[i] if i < len(toks) else (None, None)

    def take():
        nonlocal i
        if i >= len(toks):
            raise GuardSyntaxError(f"unexpected end of guard {text!r}")
        i += 1
        return toks[i - 1]

    def disj():
        g = conj()
        while peek() == ("op", "|"):
            take()
            g = guard_or(g, conj())
        return g

    def conj():
        g = neg()
        while peek() == ("op", "&"):
            take()
            g = guard_and(g, neg())
        return g

    def neg():
        if peek() == ("op", "!"):
            take()
            return guard_not(neg())
        kind, value = take()
        if kind == "id":
            if value == "true":
                return TRUE
            if value == "false":
                return FALSE
            if variables is not None and value not in variables:
                raise GuardSyntaxError(f"unknown variable {value!r} in guard {text!r}")
            return (((value, True),),)
        if value == "(":
            g = disj()
            if take() != ("op", ")"):
                raise GuardSyntaxError(f"expected ')' in {text!r}")
            return g
        raise GuardSyntaxError(f"unexpected {value!r} in guard {text!r}")

    if not toks:
        raise GuardSyntaxError("empty guard")
    g = disj()
    if i != len(toks):
        raise GuardSyntaxError(f"trailing tokens in guard {text!r}")
    return g


# -- letters ------------------------------------------------------------------

def letter_of(assignment, order):
    x = 0
    for i, v in enumerate(order):
        if assignment[v]:
            x |= 1 << i
    return x


def assignment_of(letter, order):
    return {v: bool(letter >> i & 1) for i, v in enumerate(order)}


def cube_mask(c, order):
    """(mask, value) such that a letter over ``order`` matches ``c`` iff letter & mask == value."""
    pos = {v: i for i, v in enumerate(order)}
    mask = val = 0
    for v, x in c:
        mask |= 1 << pos[v]
        if x:
            val |= 1 << pos[v]
    return mask, val


def guard_letters(guard, order):
    """Boolean array over all letters of ``order`` marking where ``guard`` holds."""
    letters = np.arange(1 << len(order), dtype=np.int64)
    hit = np.zeros(len(letters), dtype=bool)
    for c in guard:
        mask, val = cube_mask(c, order)
        hit |= (letters & mask) == val
    return hit


def hamming(a, b):
    return bin(a ^ b).count("1")


# -- automata -----------------------------------------------------------------

@dataclass(frozen=True)
class SafetyAutomaton:
    states: tuple
    init: str
    variables: tuple
    transitions: tuple          # (src, guard, dst)
    unsafe: frozenset = frozenset()
    tag: str = SPEC
    _index: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})
        if self.init not in self._index:
            raise ValueError(f"initial state {self.init!r} is not a state")
        for src, g, dst in self.transitions:
            if src not in self._index or dst not in self._index:
                raise ValueError(f"transition {src!r}->{dst!r} names an unknown state")
            for v in guard_variables(g):
                if v not in self.variables:
                    raise ValueError(f"guard on {src!r} reads undeclared variable {v!r}")

    @classmethod
    def build(cls, states, init, variables, transitions, unsafe=(), tag=SPEC):
        """Construct, closing unsafe states into traps for spec-like tags."""
        unsafe = frozenset(unsafe)
        trans = [(s, g, d) for s, g, d in transitions if g]
        if tag in TRAP_TAGS:
            trans = [t for t in trans if t[0] not in unsafe] + [(u, TRUE, u) for u in sorted(unsafe)]
        return cls(tuple(states), init, tuple(variables), tuple(trans), unsafe, tag)

    def index(self, state):
        return self._index[state]

    def successors(self, state):
        return [(g, d) for s, g, d in self.transitions if s == state]

    def step(self, state, assignment):
        hits = [d for s, g, d in self.transitions if s == state and guard_holds(g, assignment)]
        if len(set(hits)) > 1:
            raise NondeterministicInput(state, hits[0], hits[1])
        return hits[0] if hits else None

    def run(self, trace):
        """States visited on a trace of assignments (None once stuck)."""
        s = self.init
        out = [s]
        for a in trace:
            s = self.step(s, a) if s is not None else None
            out.append(s)
        return out

    def accepts(self, trace):
        return all(s is not None and s not in self.unsafe for s in self.run(trace))

    def compile(self, order=None):
        """dst-index table of shape (n_states, 2^|order|); -1 where nothing fires."""
        order = tuple(order or self.variables)
        missing = set(self.variables) - set(order)
        if missing:
            raise ValueError(f"compile order misses {sorted(missing)}")
        n = 1 << len(order)
        table = np.full((len(self.states), n), -1, dtype=np.int64)
        fired = {}
        for src, g, dst in self.transitions:
            si, di = self._index[src], self._index[dst]
            hit = guard_letters(g, order)
            clash = hit & (table[si] >= 0) & (table[si] != di)
            if clash.any():
                letter = int(np.argmax(clash))
                a = assignment_of(letter, order)
                other = next(gg for ss, gg, dd in self.transitions
                             if ss == src and dd != dst and guard_holds(gg, a))
                raise NondeterministicInput(src, guard_str(other), guard_str(g))
            table[si, hit] = di
            fired[si] = True
        return table

    def is_complete(self, order=None):
        return bool((self.compile(order) >= 0).all())

    def check_deterministic(self):
        for s in self.states:
            succ = self.successors(s)
            for (g1, d1), (g2, d2) in itertools.combinations(succ, 2):
                if d1 == d2:
                    continue
                for c1 in g1:
                    for c2 in g2:
                        if cubes_overlap(c1, c2):
                            raise NondeterministicInput(s, cube_str(c1), cube_str(c2))

    def __str__(self):
        lines = [f"automaton[{self.tag}] init={self.init} unsafe={sorted(self.unsafe)}"]
        for s, g, d in self.transitions:
            lines.append(f"  {s} --{guard_str(g)}--> {d}")
        return "\n".join(lines)


def complete(a, policy="unsafe-sink", sink="sink"):
    """Route every unmatched (state, letter) to a fresh sink (or a self-loop).

    ``policy`` is ``"unsafe-sink"`` (fresh unsafe trap) or ``"self-loop"``.
    """
    a.check_deterministic()
    extra = []
    for s in a.states:
        covered = guard_or(*[g for g, _ in a.successors(s)])
        missing = guard_not(covered) if covered else TRUE
        if missing:
            extra.append((s, missing))
    if not extra:
        return a
    if policy == "self-loop":
        trans = list(a.transitions) + [(s, g, s) for s, g in extra]
        return SafetyAutomaton(a.states, a.init, a.variables, tuple(trans), a.unsafe, a.tag)
    if policy != "unsafe-sink":
        raise ValueError(f"unknown completion policy {policy!r}")
    name = sink
    while name in a.states:
        name += "_"
    trans = list(a.transitions) + [(s, g, name) for s, g in extra] + [(name, TRUE, name)]
    return SafetyAutomaton(a.states + (name,), a.init, a.variables, tuple(trans),
                           a.unsafe | {name}, a.tag)


def relabel(a, mapping, tag=None):
    """Rename variables in every guard; the mapping must be injective on ``a.variables``."""
    image = [mapping.get(v, v) for v in a.variables]
    if len(set(image)) != len(image):
        raise MappingCollision(f"mapping merges variables: {mapping}")
    trans = tuple((s, guard_rename(g, mapping), d) for s, g, d in a.transitions)
    return SafetyAutomaton(a.states, a.init, tuple(image), trans, a.unsafe, tag or a.tag)


def all_safe(flags):
    return not any(flags)


def product(automata, safe=all_safe, tag=MONITOR, sep="|"):
    """Synchronous product over reachable state tuples.

    ``safe`` maps the tuple of per-component unsafe flags to True for safe
    product states.
    """
    variables = []
    for a in automata:
        for v in a.variables:
            if v not in variables:
                variables.append(v)
    init = tuple(a.init for a in automata)
    names = {init: sep.join(init)}
    queue = deque([init])
    trans = []
    unsafe = set()
    while queue:
        tup = queue.popleft()
        flags = tuple(s in a.unsafe for s, a in zip(tup, automata))
        if not safe(flags):
            unsafe.add(names[tup])
        combos = [[((), ())]]
        for s, a in zip(tup, automata):
            nxt = []
            for c, dsts in combos[-1]:
                for g, d in a.successors(s):
                    for gc in g:
                        m = cube_and(c, gc)
                        if m is not None:
                            nxt.append((m, dsts + (d,)))
            combos.append(nxt)
        grouped = {}
        for c, dst in combos[-1]:
            grouped.setdefault(dst, []).append(c)
        for dst, cubes in sorted(grouped.items()):
            if dst not in names:
                names[dst] = sep.join(dst)
                queue.append(dst)
            trans.append((names[tup], simplify(tuple(cubes)), names[dst]))
    return SafetyAutomaton(tuple(names.values()), names[init], tuple(variables),
                           tuple(trans), frozenset(unsafe), tag)


def require_complete(a, order=None):
    table = a.compile(order)
    if (table < 0).any():
        si, letter = map(int, np.argwhere(table < 0)[0])
        raise IncompleteAutomaton(
            f"state {a.states[si]!r} has no transition for {assignment_of(letter, order or a.variables)}")
    return table


def letters_to_guard(mask, order):
    """Guard covering exactly the letters flagged in ``mask`` (length 2^|order|)."""
    mask = np.asarray(mask, dtype=bool)
    out = []

    def rec(m, level, prefix):
        if m.all():
            out.append(cube(prefix))
            return
        if not m.any():
            return
        half = len(m) // 2
        v = order[level - 1]
        rec(m[:half], level - 1, prefix + ((v, False),))
        rec(m[half:], level - 1, prefix + ((v, True),))

    rec(mask, len(order), ())
    return simplify(tuple(out))


def automaton_from_table(names, init, order, table, unsafe=(), tag=MONITOR):
    """SafetyAutomaton whose transition function is the dst-index ``table``."""
    trans = []
    for si, row in enumerate(np.asarray(table)):
        for di in sorted(set(row.tolist())):
            if di < 0:
                continue
            trans.append((names[si], letters_to_guard(row == di, order), names[di]))
    return SafetyAutomaton(tuple(names), names[init], tuple(order), tuple(trans),
                           frozenset(unsafe), tag)
