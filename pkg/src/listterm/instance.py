"""Instance checking: does a general state represent a specific one?"""
from __future__ import annotations

from .constraints import LinTerm, SymVar, entails, offset_classes, project, provably_equal
from .ir import Program
from .state import AbstractState, Value, follow_list


class _Matcher:
    def __init__(self, p: Program, general: AbstractState, specific: AbstractState):
        self.p = p
        self.g = general
        self.s = specific
        self.kb = specific.kb
        self.sigma: dict[SymVar, LinTerm] = {}
        self.used: set = set()

    def bind(self, gv: Value, st) -> bool:
        st = LinTerm.of(st)
        if isinstance(gv, int):
            return provably_equal(self.kb, gv, st)
        if gv in self.sigma:
            return provably_equal(self.kb, self.sigma[gv], st)
        self.sigma[gv] = st
        return True

    def propagate(self):
        oc = offset_classes(self.g.kb)
        for v in sorted(self.g.vars(), key=lambda v: v.id):
            if v in self.sigma:
                continue
            root, off = oc.canon(v)
            if root is None:
                self.sigma[v] = LinTerm.of(off)
                continue
            for w in sorted(self.sigma, key=lambda w: w.id):
                rw, ow = oc.canon(w)
                if rw == root:
                    self.sigma[v] = self.sigma[w] + (off - ow)
                    break

    def run(self) -> dict[SymVar, LinTerm] | None:
        g, s = self.g, self.s
        if g.pos != s.pos or set(g.lv) != set(s.lv):
            return None
        for name in sorted(g.lv):
            if not self.bind(g.lv[name], s.lv[name]):
                return None
        todo_li = sorted(g.li, key=lambda i: i.head.id)
        todo_al = sorted(g.al, key=lambda a: a.lo.id)
        todo_pt = sorted(g.pt, key=lambda p: (p.addr.id, str(p.ty)))
        stalled = False
        while todo_li or todo_al or todo_pt:
            self.propagate()
            progress = False
            for inv in list(todo_li):
                if inv.head not in self.sigma:
                    continue
                last = inv.fields[inv.rec_index].last
                if isinstance(last, int):
                    stop = LinTerm.of(last)
                elif last in self.sigma:
                    stop = self.sigma[last]
                elif stalled:
                    stop = None
                else:
                    continue
                d = follow_list(self.p, s, self.sigma[inv.head], inv.elem_ty, stop=stop)
                if d is None:
                    return None
                comps = d.components()
                if comps & self.used:
                    return None
                self.used |= comps
                if not self.bind(inv.length, d.total_len):
                    return None
                for f, fst, lst in zip(inv.fields, d.firsts, d.lasts):
                    if not (self.bind(f.first, fst) and self.bind(f.last, lst)):
                        return None
                todo_li.remove(inv)
                progress = True
            for a in list(todo_al):
                if a.lo not in self.sigma:
                    continue
                match = next((b for b in sorted(s.al, key=lambda b: b.lo.id)
                              if b not in self.used and provably_equal(self.kb, b.lo, self.sigma[a.lo])),
                             None)
                if match is None or not self.bind(a.hi, match.hi):
                    return None
                self.used.add(match)
                todo_al.remove(a)
                progress = True
            for pt in list(todo_pt):
                if pt.addr not in self.sigma:
                    continue
                match = next((q for q in sorted(s.pt, key=lambda q: q.addr.id)
                              if q not in self.used and q.ty == pt.ty
                              and provably_equal(self.kb, q.addr, self.sigma[pt.addr])), None)
                if match is None or not self.bind(pt.value, match.value):
                    return None
                self.used.add(match)
                todo_pt.remove(pt)
                progress = True
            if not progress:
                if stalled:
                    return None
                stalled = True
            else:
                stalled = False
        self.propagate()
        kb = project(g.kb, set(self.sigma))
        for c in kb:
            if not entails(self.kb, c.substitute(self.sigma)):
                return None
        return self.sigma


def instance_mapping(p: Program, general: AbstractState, specific: AbstractState
                     ) -> dict[SymVar, LinTerm] | None:
    """σ with σ(general) covered by ``specific``, or None when not found."""
    return _Matcher(p, general, specific).run()


def is_instance(p: Program, general: AbstractState, specific: AbstractState) -> bool:
    return instance_mapping(p, general, specific) is not None
