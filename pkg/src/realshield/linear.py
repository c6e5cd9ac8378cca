"""Linear atoms over exact rationals, predicates built from them, and a small expression parser."""
import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import NamedTuple

from .errors import SchemaError, UndefinedVariable

RELATIONS = ("<", "<=", "=", ">=", ">")
_FLIP = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}
_NEGATE = {"<": (">=",), "<=": (">",), ">": ("<=",), ">=": ("<",), "=": ("<", ">")}


def rational(value):
    """Exact rational from an int, a decimal string, a ``p/q`` string or a Decimal.

    Floats are converted through their shortest repr, so ``0.2`` becomes ``1/5``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def format_rational(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class LinearAtom:
    """``sum(coef * var) rel bound``; coefficients are a sorted tuple of (name, Fraction)."""

    coeffs: tuple
    rel: str
    bound: Fraction

    @classmethod
    def make(cls, coeffs, rel, bound):
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        items = tuple(sorted((v, Fraction(c)) for v, c in dict(coeffs).items() if c))
        if not items:
            raise ValueError("linear atom needs at least one variable")
        return cls(items, rel, Fraction(bound))

    @property
    def variables(self):
        return frozenset(v for v, _ in self.coeffs)

    def lhs(self, valuation):
        return sum(c * valuation[v] for v, c in self.coeffs)

    def holds(self, valuation):
        return _compare(self.lhs(valuation), self.rel, self.bound)

    def negation(self):
        """The negated atom as a list of alternative atoms (two for an equality)."""
        return [LinearAtom(self.coeffs, r, self.bound) for r in _NEGATE[self.rel]]

    def rename(self, mapping):
        return LinearAtom.make({mapping.get(v, v): c for v, c in self.coeffs}, self.rel, self.bound)

    def __str__(self):
        parts = []
        for i, (v, c) in enumerate(self.coeffs):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            term = v if mag == 1 else f"{format_rational(mag)}*{v}"
            if i == 0:
                parts.append(term if sign == "+" else f"-{term}")
            else:
                parts.append(f" {sign} {term}")
        return f"{''.join(parts)} {self.rel} {format_rational(self.bound)}"


def _compare(lhs, rel, rhs):
    if rel == "<":
        return lhs < rhs
    if rel == "<=":
        return lhs <= rhs
    if rel == "=":
        return lhs == rhs
    if rel == ">=":
        return lhs >= rhs
    return lhs > rhs


class Literal(NamedTuple):
    pred: str
    polarity: bool

    def __str__(self):
        return self.pred if self.polarity else f"!{self.pred}"

    def negate(self):
        return Literal(self.pred, not self.polarity)


@dataclass(frozen=True)
class Predicate:
    """A named conjunction of atoms; its negation is kept as a DNF of single atoms."""

    id: str
    positive: tuple
    negative: tuple = field(compare=False)
    variables: frozenset = field(compare=False)
    expr: str = field(default="", compare=False)

    @classmethod
    def from_atoms(cls, pid, atoms, expr=""):
        atoms = tuple(dict.fromkeys(atoms))
        if not atoms:
            raise ValueError(f"predicate {pid} has no atoms")
        negative = tuple((alt,) for a in atoms for alt in a.negation())
        variables = frozenset().union(*(a.variables for a in atoms))
        return cls(pid, atoms, negative, variables, expr or " & ".join(map(str, atoms)))

    def holds(self, valuation):
        return all(a.holds(valuation) for a in self.positive)

    def form(self, polarity):
        """Selected form as a DNF: a list of conjunctions."""
        return [self.positive] if polarity else list(self.negative)

    def rename(self, pid, mapping):
        return Predicate.from_atoms(pid, [a.rename(mapping) for a in self.positive])


# -- expression parsing -----------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
                    r"|([A-Za-z_][A-Za-z0-9_]*)|(<=|>=|==|<|>|=|&|\+|-|\*|/|\(|\)))")


class _Abs:
    def __init__(self, inner):
        self.inner = inner


class _Parser:
    def __init__(self, text, variables, constants, pointer):
        self.text = text
        self.vars = variables
        self.consts = constants
        self.pointer = pointer
        self.toks = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                self.fail(f"unexpected character at offset {pos}")
            num, name, op = m.groups()
            self.toks.append(("num", Fraction(num)) if num else ("name", name) if name else ("op", op))
            pos = m.end()
        self.i = 0

    def fail(self, msg):
        raise SchemaError(f"{msg} in {self.text!r}", self.pointer)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            self.fail(f"expected {value or 'token'}")
        self.i += 1
        return tok

    def conjunction(self):
        atoms = self.chain()
        while self.peek() == ("op", "&"):
            self.take()
            atoms += self.chain()
        if self.i != len(self.toks):
            self.fail("trailing input")
        return atoms

    def chain(self):
        sides = [self.sum()]
        rels = []
        while self.peek()[0] == "op" and self.peek()[1] in ("<", "<=", "=", "==", ">=", ">"):
            rel = self.take()[1]
            rels.append("=" if rel == "==" else rel)
            sides.append(self.sum())
        if not rels:
            self.fail("expected a comparison")
        atoms = []
        for (left, rel, right) in zip(sides, rels, sides[1:]):
            atoms += self.compare(left, rel, right)
        return atoms

    def compare(self, left, rel, right):
        if isinstance(right, _Abs) and not isinstance(left, _Abs):
            left, rel, right = right, _FLIP[rel], left
        if isinstance(left, _Abs):
            if isinstance(right, _Abs) or right[0] or rel not in ("<", "<="):
                self.fail("abs() is only supported as 'abs(expr) < constant' (negate the predicate for >)")
            c = right[1]
            inner = left.inner
            lo = ">" if rel == "<" else ">="
            return self.compare(inner, rel, ({}, c)) + self.compare(inner, lo, ({}, -c))
        coeffs = dict(left[0])
        for v, c in right[0].items():
            coeffs[v] = coeffs.get(v, 0) - c
        coeffs = {v: c for v, c in coeffs.items() if c}
        if not coeffs:
            self.fail("comparison between constants")
        return [LinearAtom.make(coeffs, rel, right[1] - left[1])]

    def sum(self):
        acc = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            if isinstance(acc, _Abs) or isinstance(rhs, _Abs):
                self.fail("abs() cannot be combined arithmetically")
            acc = _add(acc, rhs, 1 if op == "+" else -1)
        return acc

    def term(self):
        acc = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if isinstance(acc, _Abs) or isinstance(rhs, _Abs):
                self.fail("abs() cannot be combined arithmetically")
            if op == "*":
                if acc[0] and rhs[0]:
                    self.fail("nonlinear product")
                k, form = (acc[1], rhs) if not acc[0] else (rhs[1], acc)
                acc = _scale(form, k)
            else:
                if rhs[0]:
                    self.fail("division by a variable")
                if rhs[1] == 0:
                    self.fail("division by zero")
                acc = _scale(acc, 1 / rhs[1])
        return acc

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            if isinstance(inner, _Abs):
                self.fail("negated abs()")
            return _scale(inner, -1)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        kind, value = self.take()
        if kind == "num":
            return ({}, value)
        if kind == "name":
            if value == "abs" and self.peek() == ("op", "("):
                self.take("(")
                inner = self.sum()
                self.take(")")
                if isinstance(inner, _Abs):
                    self.fail("nested abs()")
                return _Abs(inner)
            if value in self.consts:
                return ({}, self.consts[value])
            if value in self.vars:
                return ({value: Fraction(1)}, Fraction(0))
            raise UndefinedVariable(f"undefined name {value!r} in {self.text!r}", self.pointer)
        if value == "(":
            inner = self.sum()
            self.take(")")
            return inner
        self.fail(f"unexpected {value!r}")


def _add(a, b, sign):
    coeffs = dict(a[0])
    for v, c in b[0].items():
        coeffs[v] = coeffs.get(v, 0) + sign * c
    return ({v: c for v, c in coeffs.items() if c}, a[1] + sign * b[1])


def _scale(form, k):
    return ({v: c * k for v, c in form[0].items() if c * k}, form[1] * k)


def parse_atoms(text, variables, constants=None, pointer=""):
    """Parse ``text`` (comparison chains joined by ``&``) into a list of atoms."""
    return _Parser(text, set(variables), dict(constants or {}), pointer).conjunction()


def parse_value(text, constants=None, pointer=""):
    """Evaluate a constant expression such as ``"T/2"`` or ``"0.02"``."""
    if not isinstance(text, str):
        return rational(text)
    p = _Parser(text, set(), dict(constants or {}), pointer)
    form = p.sum()
    if isinstance(form, _Abs) or form[0] or p.i != len(p.toks):
        p.fail("expected a constant expression")
    return form[1]
