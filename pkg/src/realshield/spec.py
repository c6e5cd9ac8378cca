"""Spec files: JSON parsing, time-interval expansion and Boolean abstraction."""
import hashlib
import json
from dataclasses import dataclass, field, replace
from decimal import Decimal
from fractions import Fraction

import jsonschema

from .automata import (FALSE, TRUE, SafetyAutomaton, guard_and, guard_not, guard_or,
                       guard_str, guard_variables, parse_guard)
from .engine import EngineConfig
from .errors import (DuplicatePredicateId, GuardSyntaxError, MixedKindPredicate,
                     NoClockDeclared, SchemaError, UndefinedVariable)
from .linear import LinearAtom, Predicate, format_rational, parse_atoms, parse_value

INPUT_REAL, OUTPUT_REAL, CLOCK = "input-real", "output-real", "clock"
INPUT_BOOL, OUTPUT_BOOL = "input-bool", "output-bool"
KINDS = (INPUT_REAL, OUTPUT_REAL, CLOCK, INPUT_BOOL, OUTPUT_BOOL)
ELSE = "else"
PRIME = "'"

_number = {"type": ["string", "number", "integer"]}
_automaton_schema = {
    "type": "object",
    "required": ["states", "init", "transitions"],
    "additionalProperties": False,
    "properties": {
        "states": {"type": "array", "items": {"type": ["string", "integer"]}, "minItems": 1},
        "init": {"type": ["string", "integer"]},
        "unsafe": {"type": "array", "items": {"type": ["string", "integer"]}},
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["src", "guard", "dst"],
                "additionalProperties": False,
                "properties": {
                    "src": {"type": ["string", "integer"]},
                    "guard": {"type": "string"},
                    "dst": {"type": ["string", "integer"]},
                    "interval": {"type": "array", "minItems": 2, "maxItems": 2,
                                 "items": {"type": ["string", "number", "integer", "null"]}},
                },
            },
        },
    },
}

SCHEMA = {
    "type": "object",
    "required": ["variables", "predicates", "automaton"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "variables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "kind"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
                    "kind": {"enum": list(KINDS)},
                    "range": {"type": "array", "minItems": 2, "maxItems": 2,
                              "items": {"type": ["string", "number", "integer", "null"]}},
                },
            },
        },
        "constants": {"type": "object", "additionalProperties": _number},
        "predicates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "expr"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
                    "expr": {"type": "string"},
                },
            },
        },
        "automaton": _automaton_schema,
        "physics": _automaton_schema,
        "runtime": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "history": {"type": "integer", "minimum": 1},
                "window": {"type": "integer", "minimum": 2},
                "dnf_budget": {"type": "integer", "minimum": 1},
                "max_group_size": {"type": "integer", "minimum": 1},
                "strict_margin": _number,
            },
        },
        "simulation": {"type": "object"},
        "table2": {"type": "object"},
    },
}


@dataclass(frozen=True)
class RuntimeConfig:
    history: int = 5
    window: int = 5
    dnf_budget: int = 64
    max_group_size: int = 2 ** 20
    strict_margin: Fraction = Fraction(1, 10 ** 6)

    def engine(self):
        return EngineConfig(self.dnf_budget, self.max_group_size, self.strict_margin)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    range: tuple = (None, None)


@dataclass(frozen=True)
class Transition:
    src: str
    guard: object        # DNF tuple, or ELSE
    dst: str
    interval: tuple = None


@dataclass(frozen=True)
class AutomatonDef:
    states: tuple
    init: str
    unsafe: tuple
    transitions: tuple


@dataclass(frozen=True)
class SpecFile:
    name: str
    variables: tuple
    constants: dict
    predicates: dict                # id -> Predicate, declaration order
    automaton: AutomatonDef
    physics: AutomatonDef = None
    runtime: RuntimeConfig = RuntimeConfig()
    simulation: dict = field(default_factory=dict)
    table2: dict = field(default_factory=dict)
    description: str = ""

    def variable(self, name):
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def kind(self, name):
        return self.variable(name).kind

    def names(self, *kinds):
        return [v.name for v in self.variables if v.kind in kinds]

    @property
    def clock(self):
        clocks = self.names(CLOCK)
        return clocks[0] if clocks else None

    def domain(self):
        """Range atoms per real variable."""
        out = {}
        for v in self.variables:
            lo, hi = v.range
            atoms = []
            if lo is not None:
                atoms.append(LinearAtom.make({v.name: 1}, ">=", lo))
            if hi is not None:
                atoms.append(LinearAtom.make({v.name: 1}, "<=", hi))
            if atoms:
                out[v.name] = tuple(atoms)
        return out


def _pointer(*parts):
    return "/" + "/".join(str(p) for p in parts)


def _load_json(text):
    if isinstance(text, (dict, list)):
        return text
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg} (line {e.lineno})", "/") from None


def _value(raw, constants, pointer):
    if raw is None:
        return None
    if isinstance(raw, str):
        return parse_value(raw, constants, pointer)
    return Fraction(raw) if not isinstance(raw, float) else Fraction(repr(raw))


def _automaton(doc, pointer, booleans, allow_intervals):
    states = tuple(str(s) for s in doc["states"])
    if len(set(states)) != len(states):
        raise SchemaError("duplicate state names", pointer + "/states")
    init = str(doc["init"])
    if init not in states:
        raise SchemaError(f"initial state {init!r} undeclared", pointer + "/init")
    unsafe = tuple(str(s) for s in doc.get("unsafe", []))
    for i, s in enumerate(unsafe):
        if s not in states:
            raise SchemaError(f"unsafe state {s!r} undeclared", f"{pointer}/unsafe/{i}")
    trans = []
    for i, t in enumerate(doc["transitions"]):
        ptr = f"{pointer}/transitions/{i}"
        src, dst = str(t["src"]), str(t["dst"])
        for key, s in (("src", src), ("dst", dst)):
            if s not in states:
                raise SchemaError(f"state {s!r} undeclared", f"{ptr}/{key}")
        text = t["guard"].strip()
        if text == ELSE:
            guard = ELSE
        else:
            try:
                guard = parse_guard(text)
            except GuardSyntaxError as e:
                raise SchemaError(str(e), ptr + "/guard") from None
            for v in guard_variables(guard):
                if v not in booleans:
                    raise UndefinedVariable(f"guard names undefined predicate {v!r}", ptr + "/guard")
        interval = t.get("interval")
        if interval is not None and not allow_intervals:
            raise SchemaError("intervals are not allowed here", ptr + "/interval")
        trans.append(Transition(src, guard, dst, tuple(interval) if interval is not None else None))
    return AutomatonDef(states, init, unsafe, tuple(trans))


def parse_spec(text):
    """Parse spec JSON text (or an already-decoded dict) into a :class:`SpecFile`."""
    doc = _load_json(text)
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SchemaError(e.message, _pointer(*e.absolute_path))
    constants = {}
    for k, raw in doc.get("constants", {}).items():
        constants[k] = _value(raw, constants, _pointer("constants", k))
    variables = []
    seen = set()
    for i, v in enumerate(doc["variables"]):
        if v["name"] in seen or v["name"] in constants:
            raise SchemaError(f"duplicate name {v['name']!r}", _pointer("variables", i, "name"))
        seen.add(v["name"])
        rng = tuple(_value(x, constants, _pointer("variables", i, "range", j))
                    for j, x in enumerate(v.get("range", [None, None])))
        if v["kind"] in (INPUT_BOOL, OUTPUT_BOOL) and rng != (None, None):
            raise SchemaError("Boolean variables take no range", _pointer("variables", i, "range"))
        if None not in rng and rng[0] > rng[1]:
            raise SchemaError("empty range", _pointer("variables", i, "range"))
        variables.append(Variable(v["name"], v["kind"], rng))
    if sum(v.kind == CLOCK for v in variables) > 1:
        raise SchemaError("at most one clock variable may be declared", "/variables")
    reals = [v.name for v in variables if v.kind in (INPUT_REAL, OUTPUT_REAL, CLOCK)]
    predicates = {}
    for i, p in enumerate(doc["predicates"]):
        ptr = _pointer("predicates", i)
        pid = p["id"]
        if pid in predicates or pid in seen:
            raise DuplicatePredicateId(f"duplicate predicate id {pid!r}", ptr + "/id")
        atoms = parse_atoms(p["expr"], reals, constants, ptr + "/expr")
        predicates[pid] = Predicate.from_atoms(pid, atoms, p["expr"])
    booleans = set(predicates) | {v.name for v in variables if v.kind in (INPUT_BOOL, OUTPUT_BOOL)}
    automaton = _automaton(doc["automaton"], "/automaton", booleans, True)
    physics = None
    if "physics" in doc:
        physics = _automaton(doc["physics"], "/physics", booleans, False)
    rt = doc.get("runtime", {})
    runtime = RuntimeConfig(**{k: (_value(v, constants, _pointer("runtime", k)) if k == "strict_margin" else v)
                               for k, v in rt.items()})
    spec = SpecFile(doc.get("name", "spec"), tuple(variables), constants, predicates, automaton,
                    physics, runtime, dict(doc.get("simulation", {})), dict(doc.get("table2", {})),
                    doc.get("description", ""))
    if any(t.interval is not None for t in automaton.transitions) and spec.clock is None:
        raise NoClockDeclared("time intervals need a clock variable", "/automaton")
    return spec


def load_spec(path):
    with open(path) as f:
        return parse_spec(f.read())


# -- serialisation ------------------------------------------------------------

def _num(q):
    return None if q is None else format_rational(q)


def _interval_out(x):
    if x is None or isinstance(x, str):
        return x
    return _num(Fraction(x) if not isinstance(x, float) else Fraction(repr(x)))


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, Decimal):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _automaton_doc(a):
    out = {"states": list(a.states), "init": a.init, "unsafe": list(a.unsafe), "transitions": []}
    for t in a.transitions:
        row = {"src": t.src, "guard": ELSE if t.guard == ELSE else guard_str(t.guard), "dst": t.dst}
        if t.interval is not None:
            row["interval"] = [_interval_out(x) for x in t.interval]
        out["transitions"].append(row)
    return out


def to_document(spec):
    doc = {"name": spec.name}
    if spec.description:
        doc["description"] = spec.description
    doc["variables"] = []
    for v in spec.variables:
        row = {"name": v.name, "kind": v.kind}
        if v.range != (None, None):
            row["range"] = [_num(x) for x in v.range]
        doc["variables"].append(row)
    if spec.constants:
        doc["constants"] = {k: _num(v) for k, v in spec.constants.items()}
    doc["predicates"] = [{"id": p.id, "expr": p.expr} for p in spec.predicates.values()]
    doc["automaton"] = _automaton_doc(spec.automaton)
    if spec.physics is not None:
        doc["physics"] = _automaton_doc(spec.physics)
    rt = spec.runtime
    doc["runtime"] = {"history": rt.history, "window": rt.window, "dnf_budget": rt.dnf_budget,
                      "max_group_size": rt.max_group_size, "strict_margin": _num(rt.strict_margin)}
    if spec.simulation:
        doc["simulation"] = _jsonable(spec.simulation)
    if spec.table2:
        doc["table2"] = _jsonable(spec.table2)
    return doc


def serialize(spec):
    return json.dumps(to_document(spec), indent=2)


def spec_hash(spec):
    canon = json.dumps(to_document(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- time intervals -----------------------------------------------------------

def _fresh_id(taken, stem="T"):
    k = 1
    while f"{stem}{k}" in taken:
        k += 1
    return f"{stem}{k}"


def expand_time_intervals(spec):
    """Replace interval annotations by clock predicates conjoined into the guards."""
    if not any(t.interval is not None for t in spec.automaton.transitions):
        return spec
    clock = spec.clock
    if clock is None:
        raise NoClockDeclared("time intervals need a clock variable", "/automaton")
    predicates = dict(spec.predicates)
    by_atom = {}
    for pid, p in predicates.items():
        if len(p.positive) == 1:
            by_atom[p.positive[0]] = pid
    taken = set(predicates) | {v.name for v in spec.variables}

    def clock_pred(rel, bound):
        atom = LinearAtom.make({clock: 1}, rel, bound)
        if atom not in by_atom:
            pid = _fresh_id(taken)
            taken.add(pid)
            predicates[pid] = Predicate.from_atoms(pid, [atom], f"{clock} {rel} {format_rational(bound)}")
            by_atom[atom] = pid
        return by_atom[atom]

    trans = []
    for i, t in enumerate(spec.automaton.transitions):
        if t.interval is None:
            trans.append(t)
            continue
        ptr = f"/automaton/transitions/{i}/interval"
        lo, hi = (_value(x, spec.constants, ptr) for x in t.interval)
        extra = TRUE
        if lo is not None:
            extra = guard_and(extra, (((clock_pred(">=", lo), True),),))
        if hi is not None:
            extra = guard_and(extra, (((clock_pred("<=", hi), True),),))
        if t.guard == ELSE:
            raise SchemaError("an 'else' guard cannot carry an interval", ptr)
        trans.append(Transition(t.src, guard_and(t.guard, extra), t.dst, None))
    a = spec.automaton
    return replace(spec, predicates=predicates,
                   automaton=AutomatonDef(a.states, a.init, a.unsafe, tuple(trans)))


# -- abstraction --------------------------------------------------------------

def prime(name):
    return name + PRIME


def unprime(name):
    return name[:-len(PRIME)] if name.endswith(PRIME) else name


@dataclass(frozen=True)
class AbstractSpec:
    spec: SpecFile
    predicates: dict                # id -> Predicate over real variables
    inputs: tuple                   # Boolean variable names (I)
    outputs: tuple                  # O
    primed: tuple                   # O'
    automaton: SafetyAutomaton      # over I + O
    physics: SafetyAutomaton = None
    clock_predicates: tuple = ()    # ids reading only the clock
    bool_inputs: tuple = ()
    bool_outputs: tuple = ()
    generated: tuple = ()           # clock predicate ids added by interval expansion

    @property
    def letters(self):
        return self.inputs + self.outputs

    def primed_predicates(self):
        """Output predicates renamed to their primed ids over primed variables."""
        out = {}
        for o in self.outputs:
            if o in self.predicates:
                p = self.predicates[o]
                out[prime(o)] = p.rename(prime(o), {v: prime(v) for v in p.variables})
        return out

    def domain(self, primed=False):
        d = self.spec.domain()
        if primed:
            outs = set(self.spec.names(OUTPUT_REAL))
            d = {prime(v): tuple(a.rename({v: prime(v)}) for a in atoms)
                 for v, atoms in d.items() if v in outs}
        return d


def _resolve(adef, order, tag):
    """SafetyAutomaton from an AutomatonDef, resolving ``else`` guards per state."""
    trans = []
    for s in adef.states:
        own = [t for t in adef.transitions if t.src == s]
        explicit = [t.guard for t in own if t.guard != ELSE]
        covered = guard_or(*explicit) if explicit else FALSE
        rest = guard_not(covered)
        for t in own:
            trans.append((s, rest if t.guard == ELSE else t.guard, t.dst))
    a = SafetyAutomaton.build(adef.states, adef.init, order, trans, adef.unsafe, tag)
    a.check_deterministic()
    return a


def abstract(spec):
    """Boolean abstraction: one Boolean per predicate, signature from variable kinds."""
    declared = set(spec.predicates)
    spec = expand_time_intervals(spec)
    kinds = {v.name: v.kind for v in spec.variables}
    inputs, outputs, clock_preds = [], [], []
    for pid, p in spec.predicates.items():
        ks = {kinds[v] for v in p.variables}
        has_out = OUTPUT_REAL in ks
        has_in = bool(ks & {INPUT_REAL, CLOCK})
        if has_out and has_in:
            raise MixedKindPredicate(f"predicate {pid} reads both input and output variables",
                                     f"/predicates/{list(spec.predicates).index(pid)}")
        (outputs if has_out else inputs).append(pid)
        if ks == {CLOCK}:
            clock_preds.append(pid)
    bool_in = spec.names(INPUT_BOOL)
    bool_out = spec.names(OUTPUT_BOOL)
    inputs += bool_in
    outputs += bool_out
    order = tuple(inputs + outputs)
    automaton = _resolve(spec.automaton, order, "spec")
    physics = _resolve(spec.physics, order, "relaxation") if spec.physics else None
    return AbstractSpec(spec, dict(spec.predicates), tuple(inputs), tuple(outputs),
                        tuple(prime(o) for o in outputs), automaton, physics, tuple(clock_preds),
                        tuple(bool_in), tuple(bool_out),
                        tuple(p for p in spec.predicates if p not in declared))
