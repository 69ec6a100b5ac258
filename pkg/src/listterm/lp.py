"""Exact rational linear programming: two-phase simplex with Bland's rule on sparse rows."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

Row = dict  # column -> Fraction (zeros never stored)


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    x: dict[int, Fraction] = field(default_factory=dict)


class LinearProgram:
    """``maximize obj·x`` subject to rows over variables with simple bounds.

    Variables are either nonnegative (``lb=0``) or free (``lb=None``), with an
    optional upper bound.
    """

    def __init__(self):
        self.names: list[str] = []
        self.lb: list[Fraction | None] = []
        self.ub: list[Fraction | None] = []
        self.rows: list[tuple[dict[int, Fraction], str, Fraction]] = []

    def var(self, name: str = "", lb=0, ub=None) -> int:
        if lb not in (0, None):
            raise ValueError("only lb=0 or free variables are supported")
        self.names.append(name)
        self.lb.append(None if lb is None else Fraction(0))
        self.ub.append(None if ub is None else Fraction(ub))
        return len(self.names) - 1

    def add(self, coeffs: dict[int, object], rel: str, rhs=0):
        if rel not in ("<=", ">=", "="):
            raise ValueError(rel)
        co = {j: Fraction(a) for j, a in coeffs.items() if a != 0}
        self.rows.append((co, rel, Fraction(rhs)))

    def maximize(self, obj: dict[int, object]) -> LpResult:
        return _Simplex(self, {j: Fraction(a) for j, a in obj.items() if a != 0}).solve()


class _Simplex:
    def __init__(self, lp: LinearProgram, obj: dict[int, Fraction]):
        self.lp = lp
        # column layout: each user var maps to (+col, -col or None)
        self.ncol = 0
        self.split: list[tuple[int, int | None]] = []
        for j in range(len(lp.names)):
            pos = self._col()
            neg = self._col() if lp.lb[j] is None else None
            self.split.append((pos, neg))
        rows: list[tuple[Row, Fraction]] = []
        for co, rel, rhs in lp.rows:
            r = self._expand(co)
            if rel == "<=":
                r[self._col()] = Fraction(1)
            elif rel == ">=":
                r[self._col()] = Fraction(-1)
            rows.append((r, rhs))
        for j, u in enumerate(lp.ub):
            if u is not None:
                r = self._expand({j: Fraction(1)})
                r[self._col()] = Fraction(1)
                rows.append((r, u))
        self.obj = self._expand(obj)
        self.rows: list[Row] = []
        self.rhs: list[Fraction] = []
        for r, b in rows:
            if b < 0:
                r = {k: -v for k, v in r.items()}
                b = -b
            self.rows.append(r)
            self.rhs.append(b)
        self.first_art = self.ncol
        self.basis: list[int] = []
        for r in self.rows:
            a = self._col()
            r[a] = Fraction(1)
            self.basis.append(a)

    def _col(self) -> int:
        self.ncol += 1
        return self.ncol - 1

    def _expand(self, co: dict[int, Fraction]) -> Row:
        r: Row = {}
        for j, a in co.items():
            pos, neg = self.split[j]
            r[pos] = r.get(pos, 0) + a
            if neg is not None:
                r[neg] = r.get(neg, 0) - a
        return {k: v for k, v in r.items() if v != 0}

    def _pivot(self, i: int, c: int, d: Row) -> Fraction:
        row = self.rows[i]
        p = row[c]
        if p != 1:
            row = {k: v / p for k, v in row.items()}
            self.rows[i] = row
            self.rhs[i] /= p
        for k, other in enumerate(self.rows):
            if k == i:
                continue
            a = other.get(c)
            if a is None:
                continue
            for col, v in row.items():
                nv = other.get(col, 0) - a * v
                if nv == 0:
                    other.pop(col, None)
                else:
                    other[col] = nv
            self.rhs[k] -= a * self.rhs[i]
        a = d.get(c)
        shift = Fraction(0)
        if a is not None:
            for col, v in row.items():
                nv = d.get(col, 0) - a * v
                if nv == 0:
                    d.pop(col, None)
                else:
                    d[col] = nv
            shift = a * self.rhs[i]
        self.basis[i] = c
        return shift

    def _reduced(self, cost: Row, allowed) -> Row:
        """Reduced costs ``c_j - c_B B^-1 A_j`` for the current basis."""
        d: Row = {k: v for k, v in cost.items() if allowed(k)}
        for i, b in enumerate(self.basis):
            cb = cost.get(b, 0)
            if cb == 0:
                continue
            for col, v in self.rows[i].items():
                nv = d.get(col, 0) - cb * v
                if nv == 0:
                    d.pop(col, None)
                else:
                    d[col] = nv
        return {k: v for k, v in d.items() if allowed(k)}

    def _run(self, d: Row, allowed) -> bool:
        """Maximize with reduced-cost row ``d``; False when unbounded."""
        while True:
            enter = min((k for k, v in d.items() if v > 0 and allowed(k)), default=None)
            if enter is None:
                return True
            best = None
            for i, row in enumerate(self.rows):
                a = row.get(enter)
                if a is not None and a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return False
            self._pivot(best[1], enter, d)

    def solve(self) -> LpResult:
        not_art = lambda k: k < self.first_art  # noqa: E731
        anything = lambda k: True  # noqa: E731
        phase1 = {a: Fraction(-1) for a in range(self.first_art, self.ncol)}
        d = self._reduced(phase1, anything)
        self._run(d, anything)
        infeas = sum((self.rhs[i] for i, b in enumerate(self.basis) if b >= self.first_art),
                     Fraction(0))
        if infeas > 0:
            return LpResult("infeasible")
        # drive remaining (zero-valued) artificials out of the basis
        for i in range(len(self.rows)):
            if self.basis[i] >= self.first_art:
                c = min((k for k in self.rows[i] if k < self.first_art), default=None)
                if c is not None:
                    self._pivot(i, c, {})
        keep = [i for i, b in enumerate(self.basis) if b < self.first_art]
        self.rows = [{k: v for k, v in self.rows[i].items() if k < self.first_art} for i in keep]
        self.rhs = [self.rhs[i] for i in keep]
        self.basis = [self.basis[i] for i in keep]
        d = self._reduced(self.obj, not_art)
        if not self._run(d, not_art):
            return LpResult("unbounded")
        vals = {b: self.rhs[i] for i, b in enumerate(self.basis)}
        x = {}
        for j, (pos, neg) in enumerate(self.split):
            x[j] = vals.get(pos, Fraction(0)) - (vals.get(neg, Fraction(0)) if neg is not None else 0)
        value = sum((a * x[j] for j, a in self.lp_obj_items()), Fraction(0))
        return LpResult("optimal", value, x)

    def lp_obj_items(self):
        for j in range(len(self.split)):
            pos, _ = self.split[j]
            if pos in self.obj:
                yield j, self.obj[pos]
