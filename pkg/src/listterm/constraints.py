"""Linear integer arithmetic over symbolic variables.

The knowledge base of an abstract state is a conjunction of linear
constraints.  Satisfiability and entailment are decided (soundly, not
completely) by Gaussian elimination of equalities followed by
Fourier-Motzkin elimination of inequalities.  Every derived inequality is
tightened to integers (divide by the gcd of the variable coefficients and
round the constant), so ``2x = 1`` and ``1 <= 2x <= 1`` are refuted.

``unsat`` / ``proved`` answers are always sound.  When a resource budget is
exceeded the engine gives up and answers ``sat`` / ``unknown``.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

MAX_VARS = 64
MAX_ROWS = 4096

_ids = itertools.count(1)


class SymVar:
    """A symbolic variable; identity is the integer id, the hint is cosmetic."""

    __slots__ = ("id", "hint")

    def __init__(self, id: int, hint: str = ""):
        self.id = id
        self.hint = hint

    def __eq__(self, other):
        return isinstance(other, SymVar) and other.id == self.id

    def __hash__(self):
        return hash(("sv", self.id))

    def __lt__(self, other):
        return self.id < other.id

    def __str__(self):
        return f"{self.hint or 'v'}_{self.id}"

    __repr__ = __str__


def fresh_var(hint: str = "") -> SymVar:
    return SymVar(next(_ids), hint or "v")


Number = Union[int, Fraction]


def _num(x: Number) -> Number:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


class LinTerm:
    """Affine combination ``sum(c_i * v_i) + const`` with exact coefficients."""

    __slots__ = ("coeffs", "const", "_hash")

    def __init__(self, coeffs: Iterable[tuple[SymVar, Number]] = (), const: Number = 0):
        acc: dict[SymVar, Number] = {}
        for v, c in coeffs:
            acc[v] = acc.get(v, 0) + c
        self.coeffs = tuple(sorted(((v, _num(c)) for v, c in acc.items() if c != 0),
                                   key=lambda p: p[0].id))
        self.const = _num(const)
        self._hash = hash((self.coeffs, self.const))

    @staticmethod
    def of(x: "TermLike") -> "LinTerm":
        if isinstance(x, LinTerm):
            return x
        if isinstance(x, SymVar):
            return LinTerm(((x, 1),))
        if isinstance(x, (int, Fraction)):
            return LinTerm((), x)
        raise TypeError(f"not a term: {x!r}")

    def __eq__(self, other):
        return isinstance(other, LinTerm) and self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        return self._hash

    def __add__(self, other: "TermLike") -> "LinTerm":
        o = LinTerm.of(other)
        return LinTerm(self.coeffs + o.coeffs, self.const + o.const)

    __radd__ = __add__

    def __neg__(self) -> "LinTerm":
        return LinTerm(((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other: "TermLike") -> "LinTerm":
        return self + (-LinTerm.of(other))

    def __rsub__(self, other: "TermLike") -> "LinTerm":
        return LinTerm.of(other) - self

    def __mul__(self, k: Number) -> "LinTerm":
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        return LinTerm(((v, c * k) for v, c in self.coeffs), self.const * k)

    __rmul__ = __mul__

    def vars(self) -> frozenset[SymVar]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, v: SymVar) -> Number:
        for w, c in self.coeffs:
            if w == v:
                return c
        return 0

    def is_const(self) -> bool:
        return not self.coeffs

    def as_var(self) -> SymVar | None:
        if self.const == 0 and len(self.coeffs) == 1 and self.coeffs[0][1] == 1:
            return self.coeffs[0][0]
        return None

    def substitute(self, mapping: Mapping[SymVar, "TermLike"]) -> "LinTerm":
        out = LinTerm((), self.const)
        rest = []
        for v, c in self.coeffs:
            if v in mapping:
                out = out + LinTerm.of(mapping[v]) * c
            else:
                rest.append((v, c))
        return out + LinTerm(rest)

    def evaluate(self, env: Mapping[SymVar, Number]) -> Number:
        return _num(sum((c * env[v] for v, c in self.coeffs), Fraction(0)) + self.const)

    def __str__(self):
        parts = []
        for v, c in self.coeffs:
            if c == 1:
                s = f"{v}"
            elif c == -1:
                s = f"-{v}"
            else:
                s = f"{c}*{v}"
            parts.append(s)
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    __repr__ = __str__


TermLike = Union[LinTerm, SymVar, int, Fraction]


def _lcm_den(values) -> int:
    m = 1
    for x in values:
        if isinstance(x, Fraction):
            m = m * x.denominator // math.gcd(m, x.denominator)
    return m


# A row is the normal form used by the solver: (items, const, is_eq) meaning
# sum(a*v for v, a in items) + const  (= | <=)  0, with integer coefficients.
Row = tuple


def _norm_row(coeffs: Mapping[SymVar, int], const: int, is_eq: bool):
    """Normalize; returns a Row, ``True`` (trivially valid) or ``False``."""
    items = [(v, a) for v, a in coeffs.items() if a]
    if not items:
        return (const == 0) if is_eq else (const <= 0)
    g = 0
    for _, a in items:
        g = math.gcd(g, a)
    if is_eq:
        if const % g:
            return False
        items = [(v, a // g) for v, a in items]
        const //= g
        items.sort(key=lambda p: p[0].id)
        if items[0][1] < 0:
            items = [(v, -a) for v, a in items]
            const = -const
    else:
        items = [(v, a // g) for v, a in items]
        const = -((-const) // g)  # ceil(const / g)
        items.sort(key=lambda p: p[0].id)
    return (tuple(items), const, is_eq)


class Constraint:
    """``term <= 0`` or ``term = 0`` with integer, gcd-reduced coefficients."""

    __slots__ = ("rel", "term", "_row", "_hash")

    def __init__(self, rel: str, term: TermLike):
        t = LinTerm.of(term)
        if rel == "<":
            m = _lcm_den([c for _, c in t.coeffs] + [t.const])
            t = t * m + 1
            rel = "<="
        if rel not in ("<=", "="):
            raise ValueError(f"bad relation {rel}")
        m = _lcm_den([c for _, c in t.coeffs] + [t.const])
        coeffs = {v: int(c * m) for v, c in t.coeffs}
        row = _norm_row(coeffs, int(t.const * m), rel == "=")
        if row is True:
            row = ((), 0, False)
        elif row is False:
            row = ((), 1, False)
        self._row = row
        items, const, is_eq = row
        self.rel = "=" if is_eq else "<="
        self.term = LinTerm(items, const)
        self._hash = hash(row)

    @staticmethod
    def from_row(row) -> "Constraint":
        items, const, is_eq = row
        return Constraint("=" if is_eq else "<=", LinTerm(items, const))

    def __eq__(self, other):
        return isinstance(other, Constraint) and self._row == other._row

    def __hash__(self):
        return self._hash

    def sort_key(self):
        items, const, is_eq = self._row
        return (tuple((v.id, a) for v, a in items), const, is_eq)

    @property
    def is_true(self) -> bool:
        return not self._row[0] and self._row[1] <= 0

    @property
    def is_false(self) -> bool:
        return not self._row[0] and self._row[1] > 0

    def vars(self) -> frozenset[SymVar]:
        return self.term.vars()

    def substitute(self, mapping: Mapping[SymVar, TermLike]) -> "Constraint":
        return Constraint(self.rel, self.term.substitute(mapping))

    def negations(self) -> list["Constraint"]:
        """Disjuncts of the negation (one for ``<=``, two for ``=``)."""
        if self.rel == "<=":
            return [Constraint("<=", -self.term + 1)]
        return [Constraint("<=", self.term + 1), Constraint("<=", -self.term + 1)]

    def holds(self, env: Mapping[SymVar, Number]) -> bool:
        val = self.term.evaluate(env)
        return val == 0 if self.rel == "=" else val <= 0

    def __str__(self):
        lhs = LinTerm([(v, c) for v, c in self.term.coeffs if c > 0],
                      self.term.const if self.term.const > 0 else 0)
        rhs = LinTerm([(v, -c) for v, c in self.term.coeffs if c < 0],
                      -self.term.const if self.term.const < 0 else 0)
        return f"{lhs} {'=' if self.rel == '=' else '<='} {rhs}"

    __repr__ = __str__


def le(a: TermLike, b: TermLike) -> Constraint:
    return Constraint("<=", LinTerm.of(a) - b)


def lt(a: TermLike, b: TermLike) -> Constraint:
    return Constraint("<", LinTerm.of(a) - b)


def ge(a: TermLike, b: TermLike) -> Constraint:
    return le(b, a)


def gt(a: TermLike, b: TermLike) -> Constraint:
    return lt(b, a)


def eq(a: TermLike, b: TermLike) -> Constraint:
    return Constraint("=", LinTerm.of(a) - b)


TRUE = Constraint("<=", 0)
FALSE = Constraint("<=", 1)


class KnowledgeBase:
    """An immutable conjunction of constraints (set semantics)."""

    __slots__ = ("constraints", "_hash")

    def __init__(self, constraints: Iterable[Constraint] = ()):
        cs = set()
        for c in constraints:
            if c.is_true:
                continue
            if c.is_false:
                cs = {FALSE}
                break
            cs.add(c)
        self.constraints = frozenset(cs)
        self._hash = hash(self.constraints)

    def __eq__(self, other):
        return isinstance(other, KnowledgeBase) and self.constraints == other.constraints

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(sorted(self.constraints, key=Constraint.sort_key))

    def __contains__(self, c):
        return c in self.constraints

    def add(self, *cs: Constraint) -> "KnowledgeBase":
        if FALSE in self.constraints:
            return self
        return KnowledgeBase(itertools.chain(self.constraints, cs))

    def vars(self) -> frozenset[SymVar]:
        out = set()
        for c in self.constraints:
            out |= c.vars()
        return frozenset(out)

    def substitute(self, mapping: Mapping[SymVar, TermLike]) -> "KnowledgeBase":
        return substitute(self, mapping)

    def is_satisfiable(self) -> bool:
        return is_satisfiable(self)

    def entails(self, c: Constraint) -> bool:
        return entails(self, c)

    def __str__(self):
        return "{" + ", ".join(str(c) for c in self) + "}"

    __repr__ = __str__


# ---------------------------------------------------------------- solver core

def _substitute_row(row, v, piv):
    """Eliminate ``v`` from ``row`` using the equality ``piv`` (coefficient a on v)."""
    items, const, is_eq = row
    b = dict(items).get(v, 0)
    if not b:
        return row
    p_items, p_const, _ = piv
    a = dict(p_items)[v]
    # |a| * row - sign(a) * b * piv keeps the direction of an inequality
    k_row = abs(a)
    k_piv = -b if a > 0 else b
    acc: dict[SymVar, int] = defaultdict(int)
    for w, c in items:
        acc[w] += k_row * c
    for w, c in p_items:
        acc[w] += k_piv * c
    return _norm_row(acc, k_row * const + k_piv * p_const, is_eq)


def _pick_pivot(row):
    items = row[0]
    return min(items, key=lambda p: (abs(p[1]), p[0].id))


class _Budget(Exception):
    pass


def _gauss(rows: list) -> tuple[list, list] | None:
    """Remove all equalities by substitution; None when a row becomes false."""
    eqs = [r for r in rows if r[2]]
    ineqs = [r for r in rows if not r[2]]
    while eqs:
        piv = eqs.pop()
        v, _ = _pick_pivot(piv)
        new_eqs = []
        for r in eqs:
            r2 = _substitute_row(r, v, piv)
            if r2 is False:
                return None
            if r2 is not True:
                new_eqs.append(r2)
        new_ineqs = []
        for r in ineqs:
            r2 = _substitute_row(r, v, piv)
            if r2 is False:
                return None
            if r2 is not True:
                new_ineqs.append(r2)
        eqs, ineqs = new_eqs, new_ineqs
    return [], ineqs


def _dedupe(ineqs) -> dict:
    best: dict = {}
    for items, const, _ in ineqs:
        if items not in best or const > best[items]:
            best[items] = const
    return best


def _fm_step(best: dict, v: SymVar, budget: int) -> dict | None:
    """One Fourier-Motzkin step on ``best`` (items -> const); None when refuted."""
    pos, neg, rest = [], [], {}
    for items, const in best.items():
        a = dict(items).get(v, 0)
        if a > 0:
            pos.append((items, const, a))
        elif a < 0:
            neg.append((items, const, a))
        else:
            rest[items] = const
    if len(pos) * len(neg) + len(rest) > budget:
        raise _Budget
    for p_items, p_const, a in pos:
        for n_items, n_const, b in neg:
            acc: dict[SymVar, int] = defaultdict(int)
            for w, c in p_items:
                acc[w] += -b * c
            for w, c in n_items:
                acc[w] += a * c
            r = _norm_row(acc, -b * p_const + a * n_const, False)
            if r is False:
                return None
            if r is True:
                continue
            if r[0] not in rest or r[1] > rest[r[0]]:
                rest[r[0]] = r[1]
    return rest


def _choose_fm_var(best: dict) -> SymVar:
    pos: dict[SymVar, int] = defaultdict(int)
    neg: dict[SymVar, int] = defaultdict(int)
    for items in best:
        for v, a in items:
            if a > 0:
                pos[v] += 1
            else:
                neg[v] += 1
    vs = set(pos) | set(neg)
    return min(vs, key=lambda v: (pos[v] * neg[v] - pos[v] - neg[v], v.id))


def _refute(rows: list) -> bool:
    """True iff the rows are proved to have no integer solution."""
    if any(r is False for r in rows):
        return True
    rows = [r for r in rows if r is not True]
    for items, const, is_eq in rows:
        if not items and (const > 0 or (is_eq and const != 0)):
            return True
    rows = [r for r in rows if r[0]]
    if len({v for r in rows for v, _ in r[0]}) > MAX_VARS:
        return False
    g = _gauss(rows)
    if g is None:
        return True
    best = _dedupe(g[1])
    try:
        while best:
            v = _choose_fm_var(best)
            nxt = _fm_step(best, v, MAX_ROWS)
            if nxt is None:
                return True
            best = nxt
    except _Budget:
        return False
    return False


def _rows(cs: Iterable[Constraint]) -> list:
    return [c._row for c in cs]


def _slice(constraints: frozenset[Constraint], seed: frozenset[SymVar]) -> frozenset[Constraint]:
    """Constraints transitively sharing variables with ``seed``."""
    by_var: dict[SymVar, list[Constraint]] = defaultdict(list)
    for c in constraints:
        for v in c.vars():
            by_var[v].append(c)
    seen_v = set(seed)
    todo = list(seed)
    out = set()
    while todo:
        v = todo.pop()
        for c in by_var.get(v, ()):
            if c in out:
                continue
            out.add(c)
            for w in c.vars():
                if w not in seen_v:
                    seen_v.add(w)
                    todo.append(w)
    return frozenset(out)


@lru_cache(maxsize=200_000)
def _unsat_cached(cs: frozenset[Constraint]) -> bool:
    return _refute(_rows(cs))


def is_satisfiable(kb: KnowledgeBase) -> bool:
    """False only if ``kb`` has no integer model."""
    if FALSE in kb.constraints:
        return False
    return not _unsat_cached(kb.constraints)


@lru_cache(maxsize=200_000)
def _entails_cached(cs: frozenset[Constraint], c: Constraint) -> bool:
    if c.is_true:
        return True
    if FALSE in cs:
        return True
    if c in cs:
        return True
    relevant = _slice(cs, c.vars())
    for neg in c.negations():
        if not _unsat_cached(relevant | {neg}):
            return False
    return True


def entails(kb: KnowledgeBase, c: Constraint) -> bool:
    """True only if every integer model of ``kb`` satisfies ``c``."""
    return _entails_cached(kb.constraints, c)


def entails_all(kb: KnowledgeBase, cs: Iterable[Constraint]) -> bool:
    return all(entails(kb, c) for c in cs)


def substitute(kb: KnowledgeBase, mapping: Mapping[SymVar, TermLike]) -> KnowledgeBase:
    return KnowledgeBase(c.substitute(mapping) for c in kb.constraints)


def _eliminate_rows(rows: list, v: SymVar) -> list:
    eqs = [r for r in rows if r[2] and dict(r[0]).get(v)]
    if eqs:
        piv = min(eqs, key=lambda r: (abs(dict(r[0])[v]), len(r[0]), r))
        out = []
        for r in rows:
            if r is piv:
                continue
            r2 = _substitute_row(r, v, piv)
            if r2 is False:
                return [False]
            if r2 is not True:
                out.append(r2)
        return out
    keep = [r for r in rows if not dict(r[0]).get(v)]
    ineqs = [r for r in rows if dict(r[0]).get(v)]
    try:
        res = _fm_step(_dedupe(ineqs), v, MAX_ROWS)
    except _Budget:
        return keep
    if res is None:
        return [False]
    return keep + [(items, const, False) for items, const in res.items()]


def _from_rows(rows) -> KnowledgeBase:
    if any(r is False for r in rows):
        return KnowledgeBase([FALSE])
    return KnowledgeBase(Constraint.from_row(r) for r in rows if r is not True)


def eliminate(kb: KnowledgeBase, v: SymVar) -> KnowledgeBase:
    """Project ``v`` out of ``kb`` (over-approximation of the projected models)."""
    if FALSE in kb.constraints:
        return kb
    return _from_rows(_eliminate_rows(_rows(kb.constraints), v))


def project(kb: KnowledgeBase, keep: Iterable[SymVar]) -> KnowledgeBase:
    """Eliminate every variable not in ``keep``."""
    keep = set(keep)
    if FALSE in kb.constraints:
        return kb
    rows = _rows(kb.constraints)
    while True:
        if any(r is False for r in rows):
            return KnowledgeBase([FALSE])
        drop = {v for r in rows for v, _ in r[0]} - keep
        if not drop:
            break
        # equalities first: cheap and exact
        eq_vars = [v for r in rows if r[2] for v, a in r[0] if v in drop]
        if eq_vars:
            v = min(eq_vars, key=lambda v: v.id)
        else:
            pos: dict[SymVar, int] = defaultdict(int)
            neg: dict[SymVar, int] = defaultdict(int)
            for items, _, _ in rows:
                for w, a in items:
                    if w in drop:
                        (pos if a > 0 else neg)[w] += 1
            v = min(drop, key=lambda w: (pos[w] * neg[w] - pos[w] - neg[w], w.id))
        rows = _eliminate_rows(rows, v)
    return _from_rows(rows)


# ------------------------------------------------------------ offset classes

def simplify(kb: KnowledgeBase) -> KnowledgeBase:
    """Drop constraints implied by the others (equalities are tried last)."""
    if FALSE in kb.constraints:
        return kb
    kept = set(kb.constraints)
    for c in sorted(kb.constraints, key=lambda c: (c.rel == "=", c.sort_key())):
        rest = KnowledgeBase(kept - {c})
        if entails(rest, c):
            kept.discard(c)
    return KnowledgeBase(kept)


class OffsetClasses:
    """Equivalence classes of variables under ``x = y + c`` / ``x = c`` equalities.

    ``canon(v)`` returns ``(root, offset)`` with ``v = root + offset``;
    root is None when the class is pinned to a constant.
    """

    def __init__(self, kb: KnowledgeBase):
        adj: dict[SymVar, list[tuple[SymVar | None, Number]]] = defaultdict(list)
        consts: dict[SymVar, Number] = {}
        for c in kb.constraints:
            if c.rel != "=":
                continue
            co = c.term.coeffs
            if len(co) == 1 and abs(co[0][1]) == 1:
                v, a = co[0]
                consts.setdefault(v, -c.term.const * a)
            elif len(co) == 2 and co[0][1] == -co[1][1] and abs(co[0][1]) == 1:
                (u, a), (w, _) = co
                # a*u - a*w + k = 0  ->  u = w - k/a
                d = -c.term.const * a
                adj[u].append((w, d))
                adj[w].append((u, -d))
        self._canon: dict[SymVar, tuple[SymVar | None, Number]] = {}
        nodes = sorted(set(adj) | set(consts), key=lambda v: v.id)
        for start in nodes:
            if start in self._canon:
                continue
            comp = {start: 0}
            todo = [start]
            while todo:
                u = todo.pop()
                for w, d in adj[u]:
                    if w not in comp:
                        comp[w] = comp[u] - d  # u = w + d -> w = u - d
                        todo.append(w)
            pinned = [(u, consts[u]) for u in sorted(comp, key=lambda v: v.id) if u in consts]
            if pinned:
                u, val = pinned[0]
                base = val - comp[u]
                for w, off in comp.items():
                    self._canon[w] = (None, _num(base + off))
            else:
                root = min(comp, key=lambda v: v.id)
                r_off = comp[root]
                for w, off in comp.items():
                    self._canon[w] = (root, _num(off - r_off))

    def canon(self, x) -> tuple[SymVar | None, Number] | None:
        if isinstance(x, (int, Fraction)):
            return (None, _num(x))
        if isinstance(x, SymVar):
            return self._canon.get(x, (x, 0))
        t = LinTerm.of(x)
        if t.is_const():
            return (None, t.const)
        if len(t.coeffs) == 1 and t.coeffs[0][1] == 1:
            r, o = self.canon(t.coeffs[0][0])
            return (r, _num(o + t.const))
        return None


@lru_cache(maxsize=20_000)
def offset_classes(kb: KnowledgeBase) -> OffsetClasses:
    return OffsetClasses(kb)


def provably_equal(kb: KnowledgeBase, a: TermLike, b: TermLike) -> bool:
    oc = offset_classes(kb)
    ca, cb = oc.canon(a), oc.canon(b)
    if ca is not None and ca == cb:
        return True
    if ca is not None and cb is not None and ca[0] == cb[0]:
        # same class (or both constants) but different offsets: definitely different
        return False
    return entails(kb, eq(a, b))


def to_smtlib(kb: KnowledgeBase) -> str:
    """SMT-LIB2 dump (QF_LIA) of the knowledge base, for external cross-checks."""
    def term(t: LinTerm) -> str:
        parts = []
        for v, c in t.coeffs:
            name = f"|{v}|"
            parts.append(name if c == 1 else f"(* {_smt_num(c)} {name})")
        if t.const != 0 or not parts:
            parts.append(_smt_num(t.const))
        return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"

    lines = ["(set-logic QF_LIA)"]
    for v in sorted(kb.vars(), key=lambda v: v.id):
        lines.append(f"(declare-const |{v}| Int)")
    conj = [f"({'=' if c.rel == '=' else '<='} {term(c.term)} 0)" for c in kb]
    if conj:
        lines.append("(assert (and " + " ".join(conj) + "))" if len(conj) > 1 else f"(assert {conj[0]})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _smt_num(x) -> str:
    x = Fraction(x)
    if x.denominator != 1:
        raise ValueError("normalized constraints have integer coefficients")
    return str(x.numerator) if x >= 0 else f"(- {-x.numerator})"
