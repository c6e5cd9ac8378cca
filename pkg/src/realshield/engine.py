"""Satisfiability, UNSAT cores, partitioning and LP over predicate literals."""
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (DnfBudgetExceeded, EmptyLiteralSet, GroupTooLarge, Infeasible,
                     NotUnsat, UnknownPredicate)
from .linear import Literal
from .simplex import Delta, Simplex

# Test suites flip this on to verify every core's minimality as it is produced.
CHECK_CORES = False


@dataclass(frozen=True)
class EngineConfig:
    dnf_budget: int = 64
    max_group_size: int = 2 ** 20
    strict_margin: Fraction = Fraction(1, 10 ** 6)


DEFAULT = EngineConfig()


@dataclass
class SatResult:
    sat: bool
    model: dict = None
    core: frozenset = None

    def __bool__(self):
        return self.sat


@dataclass
class LpResult:
    model: dict
    objective: Fraction
    eps: Fraction = field(default=Fraction(0))


# -- pure conjunctions ---------------------------------------------------------

def _load(atoms):
    """Simplex holding ``atoms`` as bounds; single-variable atoms become direct bounds."""
    s = Simplex()
    for a in atoms:
        if len(a.coeffs) == 1:
            (v, c), = a.coeffs
            idx = s.var(v)
            b = a.bound / c
            rel = a.rel if c > 0 else {"<": ">", "<=": ">=", ">": "<", ">=": "<="}.get(a.rel, "=")
        else:
            # scale so the leading coefficient is 1 and shared rows are reused
            k = abs(a.coeffs[0][1])
            idx = s.row({s.var(v): c / k for v, c in a.coeffs})
            b = a.bound / k
            rel = a.rel
        _bound(s, idx, rel, b)
        if s.conflict:
            break
    return s


def _bound(s, idx, rel, b):
    if rel == "<":
        s.bound(idx, hi=Delta(b, -1))
    elif rel == "<=":
        s.bound(idx, hi=Delta(b))
    elif rel == ">":
        s.bound(idx, lo=Delta(b, 1))
    elif rel == ">=":
        s.bound(idx, lo=Delta(b))
    else:
        s.bound(idx, lo=Delta(b), hi=Delta(b))


def _concrete_eps(s, cap=Fraction(1)):
    lim = s.max_eps()
    if lim is None:
        return cap
    return min(lim / 2, cap)


def feasible(atoms):
    """Model of the conjunction ``atoms`` (strict atoms hold strictly), or None."""
    s = _load(atoms)
    if not s.check():
        return None
    return s.values(_concrete_eps(s))


# -- literals ------------------------------------------------------------------

def _forms(literals, predicates):
    out = []
    for lit in sorted(literals):
        try:
            p = predicates[lit.pred]
        except KeyError:
            raise UnknownPredicate(lit.pred) from None
        out.append(p.form(lit.polarity))
    return out


def cases(dnfs, budget=DEFAULT.dnf_budget):
    """Cartesian product of DNFs as flat atom tuples; raises when it exceeds ``budget``."""
    total = 1
    for d in dnfs:
        total *= len(d)
    if total > budget:
        raise DnfBudgetExceeded(f"{total} DNF cases exceed the budget of {budget}")
    for combo in itertools.product(*dnfs):
        yield tuple(a for conj in combo for a in conj)


def domain_atoms(variables, domain):
    """Range atoms from ``domain`` ({var: atoms}) for the given variables."""
    if not domain:
        return ()
    return tuple(a for v in sorted(variables) for a in domain.get(v, ()))


def check_sat(literals, predicates, config=DEFAULT, domain=None):
    """Decide the conjunction of the literals' selected forms by DNF case split.

    ``domain`` optionally maps variables to range atoms that are conjoined for
    every variable the literals read.
    """
    literals = frozenset(literals)
    if not literals:
        raise EmptyLiteralSet("check_sat needs at least one literal")
    dnfs = _forms(literals, predicates)
    # positive conjunctions first: if they alone are infeasible no split is needed
    fixed = [d[0] for d in dnfs if len(d) == 1]
    split = [d for d in dnfs if len(d) > 1]
    base = tuple(a for conj in fixed for a in conj)
    if domain:
        used = set().union(*(predicates[l.pred].variables for l in literals))
        base += domain_atoms(used, domain)
    if split and feasible(base) is None:
        return SatResult(False, core=literals)
    for extra in cases(split, config.dnf_budget):
        model = feasible(base + extra)
        if model is not None:
            return SatResult(True, model=model)
    return SatResult(False, core=literals)


def unsat_core(literals, predicates, config=DEFAULT, domain=None):
    """Deletion-based minimal UNSAT subset of ``literals``."""
    core = sorted(frozenset(literals))
    if check_sat(core, predicates, config, domain):
        raise NotUnsat("literal set is satisfiable")
    i = 0
    while i < len(core):
        trial = core[:i] + core[i + 1:]
        if trial and not check_sat(trial, predicates, config, domain):
            core = trial
        else:
            i += 1
    result = frozenset(core)
    if CHECK_CORES:
        _assert_minimal(result, predicates, config, domain)
    return result


def _assert_minimal(core, predicates, config, domain):
    assert not check_sat(core, predicates, config, domain), "core is satisfiable"
    for lit in core:
        rest = core - {lit}
        assert not rest or check_sat(rest, predicates, config, domain), f"core not minimal: drop {lit}"


def partition(predicates):
    """Connected components of the shared-variable graph, in table order."""
    ids = list(predicates)
    parent = {p: p for p in ids}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    owner = {}
    for pid in ids:
        for v in sorted(predicates[pid].variables):
            if v in owner:
                a, b = find(owner[v]), find(pid)
                if a != b:
                    parent[b] = a
            else:
                owner[v] = pid
    groups = {}
    for pid in ids:
        groups.setdefault(find(pid), []).append(pid)
    return [frozenset(g) for g in groups.values()]


def covers(cube, cores):
    return any(core <= cube for core in cores)


def enumerate_infeasible_cubes(group, predicates, config=DEFAULT, domain=None):
    """Minimal infeasible literal sets over ``group``.

    Literal sets of size one and two are checked exhaustively, so every minimal
    infeasible set of that size is reported; afterwards each full assignment not
    already covered is checked and, when infeasible, shrunk to a core.  A full
    assignment is infeasible exactly when it covers one of the returned cubes.
    """
    ids = sorted(group)
    n = len(ids)
    if 2 ** n > config.max_group_size:
        raise GroupTooLarge(f"group of {n} predicates exceeds 2^{config.max_group_size.bit_length() - 1}")
    cores = []
    for size in (1, 2):
        for chosen in itertools.combinations(ids, size):
            for pols in itertools.product((True, False), repeat=size):
                cube = frozenset(Literal(p, b) for p, b in zip(chosen, pols))
                if covers(cube, cores):
                    continue
                if not check_sat(cube, predicates, config, domain):
                    cores.append(cube)
    if n > 2:
        for pols in itertools.product((True, False), repeat=n):
            cube = frozenset(Literal(p, b) for p, b in zip(ids, pols))
            if covers(cube, cores):
                continue
            if not check_sat(cube, predicates, config, domain):
                cores.append(unsat_core(cube, predicates, config, domain))
    return set(cores)


def infeasible_cubes(predicates, config=DEFAULT, domain=None):
    """Union of per-group minimal infeasible cubes for a whole predicate table."""
    out = set()
    for g in partition(predicates):
        out |= enumerate_infeasible_cubes(g, predicates, config, domain)
    return out


# -- optimisation -------------------------------------------------------------

def solve_lp(atoms, targets=None, config=DEFAULT, secondary=()):
    """Feasible point of ``atoms`` minimising ``sum |v - c|`` over ``targets`` {v: c}.

    ``secondary`` is a sequence of linear objectives {var: coef} minimised
    lexicographically after the primary one.  Strict atoms hold strictly in the
    result: the optimum is computed symbolically in the infinitesimal and then
    instantiated with the smaller of ``config.strict_margin`` and half of the
    largest value keeping the optimal vertex feasible.
    """
    targets = dict(targets or {})
    s = _load(atoms)
    for v in targets:
        s.var(v)
    for objective in [None, *secondary]:
        for v, c in (objective or {}).items():
            s.var(v)
    if not s.check():
        raise Infeasible("constraints have no solution")
    obj = {}
    for v, c in sorted(targets.items()):
        c = Fraction(c)
        x = s.index(v)
        t = s.var(f"_abs_{v}")
        s.bound(s.row({t: 1, x: -1}), lo=Delta(-c))
        s.bound(s.row({t: 1, x: 1}), lo=Delta(c))
        obj[t] = Fraction(1)
    if not s.check():
        raise Infeasible("linearised objective rows are infeasible")
    stages = [obj] if obj else []
    stages += [{s.index(v): Fraction(c) for v, c in o.items()} for o in secondary]
    best = Delta(Fraction(0))
    for i, o in enumerate(stages):
        best = s.minimize(o)
        if i + 1 < len(stages):
            # freeze this stage's optimum before the next one
            s.bound(s.row(o), hi=best)
            s.check()
    eps = _concrete_eps(s, config.strict_margin)
    model = s.values(eps)
    value = sum((abs(model[v] - Fraction(c)) for v, c in targets.items()), Fraction(0))
    return LpResult(model, value, eps)
