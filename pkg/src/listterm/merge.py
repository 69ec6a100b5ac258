"""Generalization of two states at the same position, with list-invariant inference."""
from __future__ import annotations

import logging
from collections import defaultdict

from .constraints import (Constraint, KnowledgeBase, LinTerm, SymVar, entails, eq, fresh_var,
                          ge, le, offset_classes, project, provably_equal, simplify)
from .ir import Program, StructType, sizeof
from .state import (AbstractState, Allocation, DetectedList, ListField, ListInvariant,
                    PointsTo, Value, follow_list, region_of)

log = logging.getLogger(__name__)

Instantiation = dict  # merged SymVar -> LinTerm over one source state


class MergeRefused(Exception):
    pass


def detect_list(p: Program, s: AbstractState, root, elem_ty: StructType,
                stop=None) -> DetectedList | None:
    """The list reachable from ``root`` through ``elem_ty`` nodes, if any."""
    return follow_list(p, s, root, elem_ty, stop=stop)


def length_lower_bound(s: AbstractState, d: DetectedList, cap: int = 8) -> int:
    total = len(d.nodes)
    for inv in d.invariants:
        lb = 1
        while lb < cap and entails(s.kb, ge(inv.length, lb + 1)):
            lb += 1
        total += lb
    return total


class _Side:
    def __init__(self, s: AbstractState):
        self.s = s
        self.oc = offset_classes(s.kb)
        self.mu: dict[SymVar, LinTerm] = {}
        self.by_root: dict = defaultdict(list)

    def canon(self, t):
        return self.oc.canon(t)

    def root(self, x):
        c = self.canon(self.mu[x])
        return None if c is None or c[0] is None else c[0]

    def address_roots(self) -> set:
        out = set()
        for a in self.s.al:
            out |= {self.canon(a.lo)[0], self.canon(a.hi)[0]}
        for inv in self.s.li:
            out.add(self.canon(inv.head)[0])
        out.discard(None)
        return out


class _Merger:
    def __init__(self, p: Program, s: AbstractState, t: AbstractState, widening=False):
        self.p = p
        self.widening = widening
        self.a = _Side(s)
        self.b = _Side(t)
        self.order: list[SymVar] = []
        self.defs: list[Constraint] = []
        self.len_vars: list[SymVar] = []
        self.len_bounds: list[Constraint] = []

    # -- variable correspondence

    def register(self, x: SymVar, ta, tb):
        ta, tb = LinTerm.of(ta), LinTerm.of(tb)
        self.order.append(x)
        for side, t in ((self.a, ta), (self.b, tb)):
            side.mu[x] = t
            c = side.canon(t)
            if c is not None:
                side.by_root[c[0]].append((x, c[1]))

    def lookup(self, ta, tb) -> LinTerm | None:
        ca, cb = self.a.canon(ta), self.b.canon(tb)
        if ca is None or cb is None:
            return None
        if ca[0] is None and cb[0] is None and ca[1] == cb[1]:
            return LinTerm.of(ca[1])
        best = None
        for x, off in self.a.by_root.get(ca[0], ()):
            cxb = self.b.canon(self.b.mu[x])
            if cxb is None or cxb[0] != cb[0]:
                continue
            d = ca[1] - off
            if cb[1] - cxb[1] != d:
                continue
            if best is None or (d == 0 and best[1] != 0):
                best = (x, d)
                if d == 0:
                    break
        if best is None:
            return None
        return LinTerm.of(best[0]) + best[1]

    def pair(self, ta, tb, hint: str) -> LinTerm:
        r = self.lookup(ta, tb)
        if r is not None:
            return r
        x = fresh_var(hint)
        self.register(x, ta, tb)
        return LinTerm.of(x)

    def as_var(self, t: LinTerm, hint: str = "x_addr") -> SymVar:
        v = t.as_var()
        if v is not None:
            return v
        y = fresh_var(hint)
        self.register(y, t.substitute(self.a.mu), t.substitute(self.b.mu))
        self.defs.append(eq(y, t))
        return y

    def value(self, t: LinTerm, hint: str) -> Value:
        if t.is_const():
            return int(t.const)
        return self.as_var(t, hint)

    # -- the merge

    def run(self):
        s, t = self.a.s, self.b.s
        lv = {}
        for name in sorted(s.lv):
            x = fresh_var("x_" + name)
            self.register(x, s.lv[name], t.lv[name])
            lv[name] = x
        used_a: set = set()
        used_b: set = set()
        li = self.infer_lists(lv, used_a, used_b)
        al, pt = self.lift_memory(used_a, used_b)
        kb = self.lift_kb()
        merged = AbstractState(s.pos, lv, frozenset(al), frozenset(pt), frozenset(li), kb)
        return merged, dict(self.a.mu), dict(self.b.mu)

    def infer_lists(self, lv, used_a, used_b) -> list[ListInvariant]:
        s, t = self.a.s, self.b.s
        cands = []
        for name in sorted(lv):
            for ty in self.p.list_types():
                da = detect_list(self.p, s, s.lv[name], ty)
                db = detect_list(self.p, t, t.lv[name], ty)
                if da is not None and db is not None:
                    cands.append((len(da.nodes) + len(db.nodes), name, ty, da, db))
        cands.sort(key=lambda c: (c[0], c[1]))
        out = []
        for _, name, ty, da, db in cands:
            inv = self.lift_list(lv[name], da, db, used_a, used_b)
            if inv is not None:
                out.append(inv)
        # segments ending where an inferred list starts
        for name in sorted(lv):
            for inv in list(out):
                ea, eb = self.a.mu[inv.head], self.b.mu[inv.head]
                da = detect_list(self.p, s, s.lv[name], inv.elem_ty, stop=ea)
                db = detect_list(self.p, t, t.lv[name], inv.elem_ty, stop=eb)
                if da is None or db is None:
                    continue
                if not (provably_equal(s.kb, da.end, ea) and provably_equal(t.kb, db.end, eb)):
                    continue
                seg = self.lift_list(lv[name], da, db, used_a, used_b)
                if seg is not None:
                    out.append(seg)
        return out

    def lift_list(self, root, da: DetectedList, db: DetectedList, used_a, used_b
                  ) -> ListInvariant | None:
        s, t = self.a.s, self.b.s
        ca, cb = da.components(), db.components()
        if ca & used_a or cb & used_b:
            return None
        if da.const_len is not None and da.const_len == db.const_len:
            return None
        used_a |= ca
        used_b |= cb
        ty = da.elem_ty
        rec = self.p.recursive_field(ty)
        lay = self.p.layout(ty)
        head = self.as_var(LinTerm.of(root))
        length = fresh_var("x_len")
        self.register(length, da.total_len, db.total_len)
        self.len_vars.append(length)
        lb = min(length_lower_bound(s, da), length_lower_bound(t, db))
        self.len_bounds += [ge(length, 1), ge(length, lb)]
        fields = []
        for i, (off, fty) in enumerate(zip(lay.offsets, self.p.fields(ty))):
            first = self.value(self.pair(da.firsts[i], db.firsts[i], "x_fst"), "x_fst")
            last = self.value(self.pair(da.lasts[i], db.lasts[i], "x_lst"), "x_lst")
            fields.append(ListField(off, fty, first, last))
        return ListInvariant(head, ty, length, tuple(fields), rec)

    def lift_memory(self, used_a, used_b):
        s, t = self.a.s, self.b.s
        al: dict[Allocation, Allocation] = {}   # source-a allocation -> merged
        pt: dict[PointsTo, PointsTo] = {}
        changed = True
        while changed:
            changed = False
            for x in sorted(s.al - used_a - set(al), key=lambda a: a.lo.id):
                for y in sorted(t.al - used_b, key=lambda a: a.lo.id):
                    r = self.lookup(x.lo, y.lo)
                    if r is None or r.is_const():
                        continue
                    lo = self.as_var(r)
                    hi = self.as_var(self.pair(x.hi, y.hi, "x_end"), "x_end")
                    al[x] = Allocation(lo, hi)
                    used_b.add(y)
                    changed = True
                    break
            for x in sorted(s.pt - used_a - set(pt), key=lambda q: (q.addr.id, str(q.ty))):
                for y in sorted(t.pt - used_b, key=lambda q: (q.addr.id, str(q.ty))):
                    if x.ty != y.ty:
                        continue
                    r = self.lookup(x.addr, y.addr)
                    if r is None or r.is_const():
                        continue
                    addr = self.as_var(r)
                    val = self.value(self.pair(x.value, y.value, "x_val"), "x_val")
                    pt[x] = PointsTo(addr, x.ty, val)
                    used_b.add(y)
                    changed = True
                    break
        keep_pt = []
        for x, m in pt.items():
            reg = region_of(s, x.addr, sizeof(self.p, x.ty))
            if reg is not None and reg in al:
                keep_pt.append(m)
        return list(al.values()), keep_pt

    def lift_kb(self):
        cands: set[Constraint] = set(self.len_bounds)
        # when widening, only constraints already present on the older side survive
        for side in (self.a,) if self.widening else (self.a, self.b):
            inverse: dict[SymVar, SymVar] = {}
            for x in self.order:
                v = side.mu[x].as_var()
                if v is not None and v not in inverse:
                    inverse[v] = x
            keep = set(inverse)
            raw = [c for c in side.s.kb if c.vars() <= keep]
            extra = [] if self.widening else list(project(side.s.kb, keep))
            for c in raw + extra:
                cands.add(c.substitute(inverse))
        addr_a, addr_b = self.a.address_roots(), self.b.address_roots()
        for ln in self.len_vars:
            for x in self.order:
                if x == ln or self.a.root(x) in addr_a or self.b.root(x) in addr_b:
                    continue
                cands |= {eq(ln, x), le(ln, x), ge(ln, x)}
        kept = list(self.defs)
        for c in sorted(cands, key=Constraint.sort_key):
            if c.is_true or c.is_false:
                continue
            if entails(self.a.s.kb, c.substitute(self.a.mu)) and \
                    entails(self.b.s.kb, c.substitute(self.b.mu)):
                kept.append(c)
        return simplify(KnowledgeBase(kept))


def merge_states(p: Program, s: AbstractState, t: AbstractState, widening: bool = False
                 ) -> tuple[AbstractState, Instantiation, Instantiation]:
    """A state representing both ``s`` and ``t`` plus the two instantiations.

    With ``widening`` the knowledge base keeps only constraints of ``s`` (and the
    fixed length comparisons) that ``t`` also satisfies, so repeated merges
    cannot keep producing fresh bounds.
    """
    if s.pos != t.pos:
        raise MergeRefused(f"positions differ: {s.pos} vs {t.pos}")
    if set(s.lv) != set(t.lv):
        raise MergeRefused("LV domains differ")
    return _Merger(p, s, t, widening).run()


def lossy(p: Program, general: AbstractState, s: AbstractState) -> bool:
    """True when merging would forget a list that ``general`` tracks from some register."""
    for name in sorted(set(general.lv) & set(s.lv)):
        for ty in p.list_types():
            dg = detect_list(p, general, general.lv[name], ty)
            if dg is not None and detect_list(p, s, s.lv[name], ty) is None:
                return True
    return False


def widen(s: AbstractState) -> AbstractState:
    """Forget everything about list lengths except constant lower bounds."""
    lens = {inv.length for inv in s.li}
    kept = []
    for c in s.kb:
        vs = c.vars()
        if not vs & lens:
            kept.append(c)
        elif len(vs) == 1 and c.rel == "<=" and c.term.coeffs[0][1] < 0:
            kept.append(c)
    return s.with_(kb=KnowledgeBase(kept))
