"""Fourier-Motzkin projection and the forall-inputs/exists-outputs validity check."""
from fractions import Fraction

from .engine import DEFAULT, cases, feasible
from .errors import EliminationBudgetExceeded, UnknownPredicate
from .linear import LinearAtom

ELIMINATION_BUDGET = 5000


class _Ineq:
    """``sum(coef * var) <= bound`` (or ``<`` when strict); coefficients as a dict."""

    __slots__ = ("coeffs", "bound", "strict")

    def __init__(self, coeffs, bound, strict):
        self.coeffs = {v: c for v, c in coeffs.items() if c}
        self.bound = bound
        self.strict = strict

    def key(self):
        return (tuple(sorted(self.coeffs.items())), self.bound, self.strict)


def _normalize(atom):
    c = dict(atom.coeffs)
    neg = {v: -a for v, a in c.items()}
    if atom.rel == "<":
        return [_Ineq(c, atom.bound, True)]
    if atom.rel == "<=":
        return [_Ineq(c, atom.bound, False)]
    if atom.rel == ">":
        return [_Ineq(neg, -atom.bound, True)]
    if atom.rel == ">=":
        return [_Ineq(neg, -atom.bound, False)]
    return [_Ineq(c, atom.bound, False), _Ineq(neg, -atom.bound, False)]


def eliminate(atoms, variables, budget=ELIMINATION_BUDGET):
    """Project the conjunction ``atoms`` onto the complement of ``variables``.

    Returns a list of LinearAtoms, or None if the conjunction is infeasible
    (a constant contradiction appeared).  An empty list means the projection
    is the whole space.
    """
    rows = [r for a in atoms for r in _normalize(a)]
    for x in sorted(variables):
        pos, neg, rest = [], [], []
        for r in rows:
            a = r.coeffs.get(x, 0)
            (pos if a > 0 else neg if a < 0 else rest).append(r)
        if len(pos) * len(neg) + len(rest) > budget:
            raise EliminationBudgetExceeded(f"eliminating {x} needs {len(pos) * len(neg)} combinations")
        for p in pos:
            for n in neg:
                ap, an = p.coeffs[x], -n.coeffs[x]
                coeffs = {}
                for v, c in p.coeffs.items():
                    coeffs[v] = coeffs.get(v, 0) + c * an
                for v, c in n.coeffs.items():
                    coeffs[v] = coeffs.get(v, 0) + c * ap
                coeffs.pop(x, None)
                rest.append(_Ineq(coeffs, p.bound * an + n.bound * ap, p.strict or n.strict))
        seen = {}
        for r in rest:
            seen.setdefault(r.key(), r)
        rows = list(seen.values())
    out = []
    for r in rows:
        if not r.coeffs:
            if r.bound < 0 or (r.strict and r.bound == 0):
                return None
            continue
        out.append(LinearAtom.make(r.coeffs, "<" if r.strict else "<=", r.bound))
    return out


def _dnf(literals, predicates):
    out = []
    for lit in sorted(literals):
        if lit.pred not in predicates:
            raise UnknownPredicate(lit.pred)
        out.append(predicates[lit.pred].form(lit.polarity))
    return out


def check_forall_exists(input_literals, output_literals, predicates, shared=(),
                        output_variables=None, config=DEFAULT):
    """True iff every input valuation satisfying ``input_literals`` admits an output
    valuation satisfying ``output_literals`` and the ``shared`` literals.

    ``output_variables`` names the existentially quantified variables; by default
    these are the variables read by ``output_literals``.
    """
    out_dnf = _dnf(list(output_literals) + list(shared), predicates)
    if output_variables is None:
        output_variables = set()
        for lit in output_literals:
            output_variables |= predicates[lit.pred].variables
    projections = []
    for case in cases(out_dnf, config.dnf_budget):
        proj = eliminate(case, output_variables)
        if proj is None:
            continue
        if not proj:
            return True         # some case holds for every input
        projections.append(proj)
    # valid iff inputs & not(any projection) is unsatisfiable
    blockers = [[(alt,) for atom in proj for alt in atom.negation()] for proj in projections]
    in_dnf = _dnf(input_literals, predicates)
    budget = config.dnf_budget * max(1, len(projections)) ** 2 * 64
    for case in cases(in_dnf + blockers, budget):
        if feasible(case) is not None:
            return False
    return True
