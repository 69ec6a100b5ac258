"""Bounded concretization of abstract states, and concrete membership checks.

Used as a test oracle: ``concretize`` enumerates concrete states of an abstract
state under small bounds (addresses are placed canonically, one region per
4 KiB page), and ``contains`` decides whether a concrete state is represented
by an abstract one, allowing unmentioned extra memory.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .constraints import Constraint, KnowledgeBase, SymVar, is_satisfiable
from .ir import Program, sizeof
from .state import AbstractState, ListInvariant, Position, Value

PAGE = 4096


@dataclass(frozen=True)
class OracleBounds:
    max_len: int = 4
    vmin: int = -2
    vmax: int = 4

    @staticmethod
    def parse(text: str) -> "OracleBounds":
        """``len=4,vals=-2:4`` (either part optional)."""
        kw = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            key, _, val = part.partition("=")
            if key == "len":
                kw["max_len"] = int(val)
            elif key == "vals":
                lo, _, hi = val.partition(":")
                kw["vmin"], kw["vmax"] = int(lo), int(hi)
            else:
                raise ValueError(f"unknown oracle bound {key!r}")
        b = OracleBounds(**kw)
        if b.max_len < 1 or b.vmin > b.vmax:
            raise ValueError(f"empty oracle bounds {text!r}")
        return b

    @property
    def values(self) -> range:
        return range(self.vmin, self.vmax + 1)


@dataclass
class ConcreteState:
    pos: Position
    regs: dict[str, int] = field(default_factory=dict)
    blocks: list[tuple[int, int]] = field(default_factory=list)  # inclusive byte ranges
    mem: dict[int, tuple[object, int]] = field(default_factory=dict)  # addr -> (type, value)

    def block_of(self, addr: int, size: int) -> tuple[int, int] | None:
        for lo, hi in self.blocks:
            if lo <= addr and addr + size - 1 <= hi:
                return (lo, hi)
        return None

    def read(self, addr: int, ty) -> int | None:
        cell = self.mem.get(addr)
        if cell is None or cell[0] != ty:
            return None
        return cell[1]

    def key(self):
        return (self.pos, tuple(sorted(self.regs.items())), tuple(sorted(self.blocks)),
                tuple(sorted((a, str(t), v) for a, (t, v) in self.mem.items())))


# ------------------------------------------------------------ constraint search

def _val(env: dict[SymVar, int], v: Value) -> int | None:
    return v if isinstance(v, int) else env.get(v)


def _propagate(cs: list[Constraint], env: dict[SymVar, int]) -> bool:
    """Solve unit equalities and check fully bound constraints; False on conflict."""
    changed = True
    while changed:
        changed = False
        for c in cs:
            free = [(v, a) for v, a in c.term.coeffs if v not in env]
            if not free:
                if not c.holds(env):
                    return False
            elif len(free) == 1 and c.rel == "=":
                v, a = free[0]
                rest = c.term.const + sum(b * env[w] for w, b in c.term.coeffs if w in env)
                if rest % a:
                    return False
                env[v] = -rest // a
                changed = True
    return True


def _search(cs: list[Constraint], env: dict[SymVar, int], todo: list[SymVar],
            domain) -> Iterator[dict[SymVar, int]]:
    env = dict(env)
    if not _propagate(cs, env):
        return
    rest = [v for v in todo if v not in env]
    if not rest:
        yield env
        return
    v = rest[0]
    for x in domain:
        env2 = dict(env)
        env2[v] = x
        yield from _search(cs, env2, rest[1:], domain)


# ------------------------------------------------------------------ concretize

def concretize(p: Program, s: AbstractState, bounds: OracleBounds = OracleBounds()
               ) -> Iterator[ConcreteState]:
    """Every concrete state of ``s`` within ``bounds`` under canonical placement."""
    cs = list(s.kb)
    allocs = sorted(s.al, key=lambda a: a.lo.id)
    lists = sorted(s.li, key=lambda i: i.head.id)
    all_vars = sorted(s.vars(), key=lambda v: v.id)
    for lens in itertools.product(range(1, bounds.max_len + 1), repeat=len(lists)):
        env: dict[SymVar, int] = {}
        page = 1
        ok = True
        for a in allocs:
            env[a.lo] = page * PAGE
            page += 1
        node_bases: list[list[int]] = []
        for inv, n in zip(lists, lens):
            bases = [(page + i) * PAGE for i in range(n)]
            page += n
            node_bases.append(bases)
            ok &= _bind(env, inv.length, n) and _bind(env, inv.head, bases[0])
            if n >= 2:
                ok &= _bind(env, inv.fields[inv.rec_index].first, bases[1])
            else:
                for f in inv.fields:
                    if isinstance(f.first, int) and isinstance(f.last, int) and f.first != f.last:
                        ok = False
        if not ok:
            continue
        for sol in _search(cs, env, all_vars, bounds.values):
            yield from _build(p, s, sol, allocs, lists, node_bases, bounds)


def _bind(env, v: Value, x: int) -> bool:
    if isinstance(v, int):
        return v == x
    if v in env:
        return env[v] == x
    env[v] = x
    return True


def _build(p, s: AbstractState, env, allocs, lists, node_bases, bounds) -> Iterator[ConcreteState]:
    blocks = []
    for a in allocs:
        lo, hi = env[a.lo], env[a.hi]
        if hi < lo:
            return
        blocks.append((lo, hi))
    mem: dict[int, tuple[object, int]] = {}
    inner_slots = []  # (addr, ty) of unconstrained inner node fields
    for inv, bases in zip(lists, node_bases):
        size = sizeof(p, inv.elem_ty)
        n = len(bases)
        for i, b in enumerate(bases):
            blocks.append((b, b + size - 1))
            for k, f in enumerate(inv.fields):
                addr = b + f.off
                if k == inv.rec_index and i < n - 1:
                    mem[addr] = (f.ty, bases[i + 1])
                elif i == 0:
                    if n == 1 and _val(env, f.first) != _val(env, f.last):
                        return
                    mem[addr] = (f.ty, _val(env, f.first))
                elif i == n - 1:
                    mem[addr] = (f.ty, _val(env, f.last))
                else:
                    inner_slots.append((addr, f.ty))
    srt = sorted(blocks)
    if any(x[1] >= y[0] for x, y in zip(srt, srt[1:])):
        return
    for pt in sorted(s.pt, key=lambda q: q.addr.id):
        addr, val = env[pt.addr], _val(env, pt.value)
        n = sizeof(p, pt.ty)
        if not any(lo <= addr and addr + n - 1 <= hi for lo, hi in blocks):
            return
        old = mem.get(addr)
        if old is not None and old != (pt.ty, val):
            return
        mem[addr] = (pt.ty, val)
    regs = {name: env[v] for name, v in s.lv.items()}
    for combo in itertools.product(bounds.values, repeat=len(inner_slots)):
        m = dict(mem)
        for (addr, ty), x in zip(inner_slots, combo):
            m[addr] = (ty, x)
        yield ConcreteState(s.pos, dict(regs), list(blocks), m)


# -------------------------------------------------------------------- contains

class _Match:
    def __init__(self, p: Program, g: AbstractState, c: ConcreteState):
        self.p, self.g, self.c = p, g, c
        self.env: dict[SymVar, int] = {}
        self.used: list[tuple[int, int]] = []

    def bind(self, v: Value, x: int | None) -> bool:
        return x is not None and _bind(self.env, v, x)

    def claim(self, lo: int, hi: int) -> bool:
        if any(not (hi < a or b < lo) for a, b in self.used):
            return False
        self.used.append((lo, hi))
        return True

    def walk(self, inv: ListInvariant) -> bool:
        size = sizeof(self.p, inv.elem_ty)
        want = self.env.get(inv.length)
        stop = _val(self.env, inv.fields[inv.rec_index].last)
        cur = self.env[inv.head]
        nodes: list[int] = []
        rows: list[list[int]] = []
        while True:
            if self.c.block_of(cur, size) is None or cur in nodes or len(nodes) > 4096:
                return False
            vals = [self.c.read(cur + f.off, f.ty) for f in inv.fields]
            if any(v is None for v in vals):
                return False
            nodes.append(cur)
            rows.append(vals)
            nxt = vals[inv.rec_index]
            if want is not None:
                if len(nodes) == want:
                    break
            elif nxt == (0 if stop is None else stop):
                break
            cur = nxt
        if not all(self.claim(b, b + size - 1) for b in nodes):
            return False
        if not self.bind(inv.length, len(nodes)):
            return False
        return all(self.bind(f.first, a) and self.bind(f.last, b)
                   for f, a, b in zip(inv.fields, rows[0], rows[-1]))

    def run(self) -> bool:
        g, c = self.g, self.c
        if g.pos != c.pos or not set(g.lv) <= set(c.regs):
            return False
        for name, v in g.lv.items():
            if not self.bind(v, c.regs[name]):
                return False
        cs = list(g.kb)
        todo_al = sorted(g.al, key=lambda a: a.lo.id)
        todo_pt = sorted(g.pt, key=lambda q: q.addr.id)
        todo_li = sorted(g.li, key=lambda i: i.head.id)
        while todo_al or todo_pt or todo_li:
            if not _propagate(cs, self.env):
                return False
            progress = False
            for a in list(todo_al):
                if a.lo not in self.env:
                    continue
                lo = self.env[a.lo]
                blk = c.block_of(lo, 1)
                if blk is None:
                    return False
                if a.hi not in self.env:
                    self.env[a.hi] = blk[1]
                if not lo <= self.env[a.hi] <= blk[1]:
                    return False
                if not self.claim(lo, self.env[a.hi]):
                    return False
                todo_al.remove(a)
                progress = True
            for q in list(todo_pt):
                if q.addr not in self.env:
                    continue
                if not self.bind(q.value, c.read(self.env[q.addr], q.ty)):
                    return False
                todo_pt.remove(q)
                progress = True
            for inv in list(todo_li):
                if inv.head not in self.env:
                    continue
                if not self.walk(inv):
                    return False
                todo_li.remove(inv)
                progress = True
            if not progress:
                return False
        if not _propagate(cs, self.env):
            return False
        rest = KnowledgeBase(c2.substitute(self.env) for c2 in cs)
        return is_satisfiable(rest)


def contains(p: Program, g: AbstractState, c: ConcreteState) -> bool:
    """Is ``c`` (possibly with extra memory) one of the concrete states of ``g``?"""
    return _Match(p, g, c).run()
