"""Slow, independent reference implementations used to check the optimized code."""
import itertools
from fractions import Fraction

from realshield.linear import Literal


def _rows(atom):
    """``atom`` as rows (coeffs, bound, strict) meaning sum(coeffs) (<|<=) bound."""
    c = dict(atom.coeffs)
    neg = {v: -a for v, a in c.items()}
    b = atom.bound
    return {
        "<": [(c, b, True)],
        "<=": [(c, b, False)],
        ">": [(neg, -b, True)],
        ">=": [(neg, -b, False)],
        "=": [(c, b, False), (neg, -b, False)],
    }[atom.rel]


def feasible(atoms):
    """Fourier-Motzkin decision of a conjunction of linear atoms (strictness exact)."""
    rows = [r for a in atoms for r in _rows(a)]
    variables = sorted({v for a in atoms for v, _ in a.coeffs})
    for x in variables:
        lower, upper, keep = [], [], []
        for coeffs, b, s in rows:
            a = coeffs.get(x, 0)
            if a > 0:
                upper.append((coeffs, b, s))
            elif a < 0:
                lower.append((coeffs, b, s))
            else:
                keep.append((coeffs, b, s))
        for cu, bu, su in upper:
            for cl, bl, sl in lower:
                au, al = cu[x], -cl[x]
                merged = {}
                for v in set(cu) | set(cl):
                    if v != x:
                        merged[v] = cu.get(v, 0) * al + cl.get(v, 0) * au
                keep.append(({v: k for v, k in merged.items() if k}, bu * al + bl * au, su or sl))
        rows = keep
    for coeffs, b, s in rows:
        if not coeffs and (b < 0 or (s and b == 0)):
            return False
    return True


def literal_feasible(literals, predicates, domain=None):
    forms = [predicates[l.pred].form(l.polarity) for l in literals]
    extra = []
    if domain:
        used = set().union(*(predicates[l.pred].variables for l in literals))
        extra = [a for v in sorted(used) for a in domain.get(v, ())]
    for combo in itertools.product(*forms):
        if feasible([a for conj in combo for a in conj] + extra):
            return True
    return False


def naive_infeasible(predicates, domain=None):
    """Every full truth assignment of the table that has no real model.

    Walks the 2^|P| assignments depth first, carrying the feasible conjunctions
    of the prefix; a prefix with none makes all its completions infeasible.
    """
    ids = sorted(predicates)
    out = set()
    extra = [a for atoms in (domain or {}).values() for a in atoms]

    def walk(k, lits, cases):
        if not cases:
            for pols in itertools.product((True, False), repeat=len(ids) - k):
                out.add(frozenset(lits + [Literal(p, b) for p, b in zip(ids[k:], pols)]))
            return
        if k == len(ids):
            return
        for b in (True, False):
            form = predicates[ids[k]].form(b)
            nxt = [c + list(conj) for c in cases for conj in form]
            walk(k + 1, lits + [Literal(ids[k], b)], [c for c in nxt if feasible(c)])

    walk(0, [], [extra])
    return out


def winning(succ, unsafe):
    """Safety-game fixpoint with plain loops: win iff for all a there is p staying in W."""
    n, nA, nP = len(succ), len(succ[0]), len(succ[0][0])
    win = [not u for u in unsafe]
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if not win[s]:
                continue
            ok = all(any(win[succ[s][a][p]] for p in range(nP)) for a in range(nA))
            if not ok:
                win[s] = False
                changed = True
    return win


def random_game(rng, n, a_bits, p_bits, unsafe_rate=0.2):
    """Random SafetyGame-shaped arrays with absorbing unsafe states."""
    import numpy as np
    succ = rng.integers(0, n, size=(n, 1 << a_bits, 1 << p_bits))
    unsafe = rng.random(n) < unsafe_rate
    unsafe[0] = False
    for u in np.flatnonzero(unsafe):
        succ[u] = u
    return succ, unsafe


def ols_next(ys):
    """Least-squares line through (k, ys[k]) evaluated at k = len(ys), via normal equations."""
    n = len(ys)
    sx = sum(range(n))
    sxx = sum(k * k for k in range(n))
    sy = sum(ys)
    sxy = sum(k * y for k, y in enumerate(ys))
    det = n * sxx - sx * sx
    slope = (n * sxy - sx * sy) / det
    icept = (sy - slope * sx) / n
    return icept + slope * n


def hd(a, b):
    return bin(a ^ b).count("1")


def F(x):
    return Fraction(x)
