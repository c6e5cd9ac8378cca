"""Exact bounded-variable simplex over rationals extended with a symbolic infinitesimal.

Strict inequalities ``a.x < b`` are encoded as ``a.x <= b - eps`` where ``eps`` is a
positive infinitesimal; values are pairs ``c + k*eps`` ordered lexicographically.
Feasibility follows the general-simplex scheme (Bland's rule on the most
recently violated basic variable); optimisation is a primal bounded-variable
simplex on the same tableau.
"""
from fractions import Fraction

from .errors import Unbounded

MAX_ITERATIONS = 20000


class Delta:
    """``c + k*eps`` with rational ``c`` and ``k``."""

    __slots__ = ("c", "k")

    def __init__(self, c, k=0):
        self.c = c
        self.k = k

    def __add__(self, o):
        return Delta(self.c + o.c, self.k + o.k)

    def __sub__(self, o):
        return Delta(self.c - o.c, self.k - o.k)

    def __neg__(self):
        return Delta(-self.c, -self.k)

    def scale(self, f):
        return Delta(self.c * f, self.k * f)

    def __lt__(self, o):
        return self.c < o.c or (self.c == o.c and self.k < o.k)

    def __le__(self, o):
        return self.c < o.c or (self.c == o.c and self.k <= o.k)

    def __gt__(self, o):
        return o < self

    def __ge__(self, o):
        return o <= self

    def __eq__(self, o):
        return isinstance(o, Delta) and self.c == o.c and self.k == o.k

    def __hash__(self):
        return hash((self.c, self.k))

    def at(self, eps):
        return self.c + self.k * eps

    def __repr__(self):
        if not self.k:
            return f"Delta({self.c})"
        return f"Delta({self.c} {'+' if self.k > 0 else '-'} {abs(self.k)}eps)"


ZERO = Delta(Fraction(0))


def _max_eps(lower, upper, bound):
    """Tighten ``bound`` so that ``lower(eps) <= upper(eps)`` holds for eps in (0, bound]."""
    if lower.k > upper.k and lower.c < upper.c:
        lim = (upper.c - lower.c) / (lower.k - upper.k)
        if bound is None or lim < bound:
            return lim
    return bound


class Simplex:
    """Tableau over named variables.

    Original variables are created with :meth:`var`; linear rows with
    :meth:`row` become basic slack variables.  Bounds are :class:`Delta`
    values or ``None`` (unbounded).
    """

    def __init__(self):
        self.names = []
        self.lo = []
        self.hi = []
        self.val = []
        self.rows = {}          # basic index -> {nonbasic index: Fraction}
        self._by_name = {}
        self._row_cache = {}
        self.conflict = False

    # -- construction -------------------------------------------------
    def var(self, name):
        idx = self._by_name.get(name)
        if idx is None:
            idx = len(self.names)
            self._by_name[name] = idx
            self.names.append(name)
            self.lo.append(None)
            self.hi.append(None)
            self.val.append(ZERO)
        return idx

    def index(self, name):
        return self._by_name[name]

    def row(self, expr):
        """Return a slack variable equal to ``sum(coef * var)`` (``expr`` keyed by index)."""
        key = tuple(sorted(expr.items()))
        if key in self._row_cache:
            return self._row_cache[key]
        combined = {}
        value = ZERO
        for j, a in expr.items():
            a = Fraction(a)
            if j in self.rows:
                for n, b in self.rows[j].items():
                    combined[n] = combined.get(n, 0) + a * b
            else:
                combined[j] = combined.get(j, 0) + a
            value = value + self.val[j].scale(a)
        combined = {j: a for j, a in combined.items() if a}
        idx = len(self.names)
        self.names.append(f"_s{idx}")
        self.lo.append(None)
        self.hi.append(None)
        self.val.append(value)
        self.rows[idx] = combined
        self._row_cache[key] = idx
        return idx

    def bound(self, idx, lo=None, hi=None):
        if lo is not None and (self.lo[idx] is None or lo > self.lo[idx]):
            self.lo[idx] = lo
        if hi is not None and (self.hi[idx] is None or hi < self.hi[idx]):
            self.hi[idx] = hi
        if self.lo[idx] is not None and self.hi[idx] is not None and self.lo[idx] > self.hi[idx]:
            self.conflict = True
        if idx not in self.rows:
            v = self.val[idx]
            if self.lo[idx] is not None and v < self.lo[idx]:
                self._update(idx, self.lo[idx])
            elif self.hi[idx] is not None and v > self.hi[idx]:
                self._update(idx, self.hi[idx])

    def assign(self, idx, value):
        """Move a nonbasic variable to ``value`` (clipped to its bounds); used for warm starts."""
        if idx in self.rows:
            return
        if self.lo[idx] is not None and value < self.lo[idx]:
            value = self.lo[idx]
        if self.hi[idx] is not None and value > self.hi[idx]:
            value = self.hi[idx]
        self._update(idx, value)

    # -- core ---------------------------------------------------------
    def _update(self, n, v):
        theta = v - self.val[n]
        self.val[n] = v
        for b, row in self.rows.items():
            a = row.get(n)
            if a:
                self.val[b] = self.val[b] + theta.scale(a)

    def _pivot(self, b, n):
        row = self.rows.pop(b)
        a = row.pop(n)
        inv = 1 / a
        new = {j: -c * inv for j, c in row.items()}
        new[b] = inv
        for r, other in self.rows.items():
            c = other.pop(n, None)
            if c:
                for j, d in new.items():
                    s = other.get(j, 0) + c * d
                    if s:
                        other[j] = s
                    else:
                        other.pop(j, None)
        self.rows[n] = new

    def _pivot_and_update(self, b, n, v):
        a = self.rows[b][n]
        theta = (v - self.val[b]).scale(1 / a)
        self.val[b] = v
        self.val[n] = self.val[n] + theta
        for r, row in self.rows.items():
            if r != b:
                c = row.get(n)
                if c:
                    self.val[r] = self.val[r] + theta.scale(c)
        self._pivot(b, n)

    def _can_increase(self, j):
        return self.hi[j] is None or self.val[j] < self.hi[j]

    def _can_decrease(self, j):
        return self.lo[j] is None or self.val[j] > self.lo[j]

    def check(self):
        """Return True iff the bounds are jointly satisfiable."""
        if self.conflict:
            return False
        for _ in range(MAX_ITERATIONS):
            bad = None
            for b in sorted(self.rows):
                v = self.val[b]
                if (self.lo[b] is not None and v < self.lo[b]) or (
                        self.hi[b] is not None and v > self.hi[b]):
                    bad = b
                    break
            if bad is None:
                return True
            row = self.rows[bad]
            raise_ = self.lo[bad] is not None and self.val[bad] < self.lo[bad]
            entering = None
            for j in sorted(row):
                a = row[j]
                up = (a > 0) == raise_
                if (up and self._can_increase(j)) or (not up and self._can_decrease(j)):
                    entering = j
                    break
            if entering is None:
                return False
            self._pivot_and_update(bad, entering, self.lo[bad] if raise_ else self.hi[bad])
        raise RuntimeError("simplex iteration limit reached")

    def objective(self, obj):
        return sum((self.val[j].scale(c) for j, c in obj.items()), ZERO)

    def minimize(self, obj):
        """Minimise ``sum(c * var)`` from a feasible basis; returns the optimal Delta value."""
        for _ in range(MAX_ITERATIONS):
            d = {}
            for v, c in obj.items():
                if v in self.rows:
                    for j, a in self.rows[v].items():
                        d[j] = d.get(j, 0) + c * a
                else:
                    d[v] = d.get(v, 0) + c
            entering = direction = None
            for j in sorted(d):
                c = d[j]
                if c < 0 and self._can_increase(j):
                    entering, direction = j, 1
                    break
                if c > 0 and self._can_decrease(j):
                    entering, direction = j, -1
                    break
            if entering is None:
                return self.objective(obj)
            j = entering
            theta = leaving = None
            if direction > 0 and self.hi[j] is not None:
                theta, leaving = self.hi[j] - self.val[j], j
            elif direction < 0 and self.lo[j] is not None:
                theta, leaving = self.val[j] - self.lo[j], j
            for b in sorted(self.rows):
                a = self.rows[b].get(j)
                if not a:
                    continue
                rate = a * direction
                if rate > 0 and self.hi[b] is not None:
                    lim = (self.hi[b] - self.val[b]).scale(1 / rate)
                elif rate < 0 and self.lo[b] is not None:
                    lim = (self.val[b] - self.lo[b]).scale(-1 / rate)
                else:
                    continue
                if theta is None or lim < theta or (lim == theta and b < leaving):
                    theta, leaving = lim, b
            if theta is None:
                raise Unbounded(f"objective unbounded along {self.names[j]}")
            if leaving == j:
                self._update(j, self.val[j] + theta.scale(direction))
            else:
                target = self.hi[leaving] if self.rows[leaving][j] * direction > 0 else self.lo[leaving]
                self._pivot_and_update(leaving, j, target)
        raise RuntimeError("simplex iteration limit reached")

    # -- models -------------------------------------------------------
    def max_eps(self):
        """Largest concrete eps keeping every bound satisfied (None when unconstrained)."""
        limit = None
        for idx, v in enumerate(self.val):
            if self.lo[idx] is not None:
                limit = _max_eps(self.lo[idx], v, limit)
            if self.hi[idx] is not None:
                limit = _max_eps(v, self.hi[idx], limit)
        return limit

    def values(self, eps):
        return {self.names[i]: self.val[i].at(eps) for i in range(len(self.names))
                if not self.names[i].startswith("_")}
