"""Abstract states ``(pos, LV, AL, PT, LI, KB)`` and heap queries over them."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from .constraints import (KnowledgeBase, LinTerm, SymVar, entails, eq, fresh_var, le,
                          offset_classes, provably_equal)
from .ir import IrType, Program, PtrType, StructType, sizeof

Value = Union[SymVar, int]


@dataclass(frozen=True, order=True)
class Position:
    block: str
    index: int

    def __str__(self):
        return f"({self.block}, {self.index})"


@dataclass(frozen=True)
class Allocation:
    lo: SymVar
    hi: SymVar

    def __str__(self):
        return f"⟦{self.lo}, {self.hi}⟧"


@dataclass(frozen=True)
class PointsTo:
    addr: SymVar
    ty: IrType
    value: Value

    def __str__(self):
        return f"{self.addr} ↪{self.ty} {self.value}"


@dataclass(frozen=True)
class ListField:
    off: int
    ty: IrType
    first: Value
    last: Value

    def __str__(self):
        return f"({self.off}: {self.ty}: {self.first}..{self.last})"


@dataclass(frozen=True)
class ListInvariant:
    """``head ↪elem_ty_length [(off_i: ty_i: first_i..last_i)]``."""
    head: SymVar
    elem_ty: StructType
    length: SymVar
    fields: tuple[ListField, ...]
    rec_index: int

    @property
    def firsts(self) -> tuple[Value, ...]:
        return tuple(f.first for f in self.fields)

    @property
    def lasts(self) -> tuple[Value, ...]:
        return tuple(f.last for f in self.fields)

    def vars(self) -> set[SymVar]:
        out = {self.head, self.length}
        for f in self.fields:
            out |= {x for x in (f.first, f.last) if isinstance(x, SymVar)}
        return out

    def __str__(self):
        return (f"{self.head} ↪{self.elem_ty}_{{{self.length}}} "
                f"[{', '.join(str(f) for f in self.fields)}]")


@dataclass(frozen=True, eq=False)
class AbstractState:
    pos: Position
    lv: dict[str, SymVar] = field(default_factory=dict)
    al: frozenset[Allocation] = frozenset()
    pt: frozenset[PointsTo] = frozenset()
    li: frozenset[ListInvariant] = frozenset()
    kb: KnowledgeBase = field(default_factory=KnowledgeBase)

    def with_(self, **kw) -> "AbstractState":
        return replace(self, **kw)

    def vars(self) -> set[SymVar]:
        out = set(self.lv.values())
        for a in self.al:
            out |= {a.lo, a.hi}
        for p in self.pt:
            out.add(p.addr)
            if isinstance(p.value, SymVar):
                out.add(p.value)
        for inv in self.li:
            out |= inv.vars()
        return out | set(self.kb.vars())

    def __str__(self):
        return format_state(self)


class ErrState:
    """The distinguished error state: possible undefined behaviour."""

    def __str__(self):
        return "ERR"

    __repr__ = __str__


ERR = ErrState()


def _sorted(items: Iterable, key=str):
    return sorted(items, key=key)


def format_state(s: AbstractState | ErrState) -> str:
    if isinstance(s, ErrState):
        return "ERR"
    lv = ", ".join(f"{k} = {v}" for k, v in sorted(s.lv.items()))
    al = ", ".join(str(a) for a in _sorted(s.al, key=lambda a: a.lo.id))
    pt = ", ".join(str(p) for p in _sorted(s.pt, key=lambda p: (p.addr.id, str(p.ty))))
    li = ", ".join(str(i) for i in _sorted(s.li, key=lambda i: i.head.id))
    kb = ", ".join(str(c) for c in s.kb)
    return f"{s.pos}, {{{lv}}}, {{{al}}}, {{{pt}}}, {{{li}}}, {{{kb}}}"


def term(x: Value | LinTerm) -> LinTerm:
    return LinTerm.of(x)


# ------------------------------------------------------------- heap queries

def same(kb: KnowledgeBase, a, b) -> bool:
    return provably_equal(kb, a, b)


def find_pt(s: AbstractState, addr, ty: IrType | None = None) -> PointsTo | None:
    for p in _sorted(s.pt, key=lambda p: p.addr.id):
        if (ty is None or p.ty == ty) and same(s.kb, p.addr, addr):
            return p
    return None


def in_range(s: AbstractState, addr, size: int, lo, hi_incl) -> bool:
    """kb ⊨ lo <= addr and addr + size - 1 <= hi_incl."""
    oc = offset_classes(s.kb)
    ca, cl, ch = oc.canon(addr), oc.canon(lo), oc.canon(hi_incl)
    if ca is not None and cl is not None and ch is not None and ca[0] == cl[0] == ch[0]:
        return cl[1] <= ca[1] and ca[1] + size - 1 <= ch[1]
    return entails(s.kb, le(lo, addr)) and entails(s.kb, le(LinTerm.of(addr) + (size - 1), hi_incl))


def disjoint(s: AbstractState, a, a_size: int, b, b_size: int) -> bool:
    """kb ⊨ the byte ranges [a, a+a_size) and [b, b+b_size) do not overlap."""
    oc = offset_classes(s.kb)
    ca, cb = oc.canon(a), oc.canon(b)
    if ca is not None and cb is not None and ca[0] == cb[0]:
        return ca[1] + a_size <= cb[1] or cb[1] + b_size <= ca[1]
    ra, rb = region_of(s, a, a_size), region_of(s, b, b_size)
    if ra is not None and rb is not None and ra != rb:
        return True
    return (entails(s.kb, le(LinTerm.of(a) + a_size, b))
            or entails(s.kb, le(LinTerm.of(b) + b_size, a)))


def region_of(s: AbstractState, addr, size: int) -> Allocation | None:
    for a in _sorted(s.al, key=lambda a: a.lo.id):
        if in_range(s, addr, size, a.lo, a.hi):
            return a
    return None


def find_alloc_exact(s: AbstractState, lo, size: int) -> Allocation | None:
    """An allocation ⟦lo, lo + size - 1⟧."""
    for a in _sorted(s.al, key=lambda a: a.lo.id):
        if same(s.kb, a.lo, lo) and same(s.kb, a.hi, LinTerm.of(lo) + (size - 1)):
            return a
    return None


def find_list(s: AbstractState, head, elem_ty: StructType | None = None) -> ListInvariant | None:
    for inv in _sorted(s.li, key=lambda i: i.head.id):
        if (elem_ty is None or inv.elem_ty == elem_ty) and same(s.kb, inv.head, head):
            return inv
    return None


def is_null(kb: KnowledgeBase, v: Value) -> bool:
    if isinstance(v, int):
        return v == 0
    return same(kb, v, 0)


@dataclass(frozen=True)
class ListNode:
    addr: Value
    alloc: Allocation
    pts: tuple[PointsTo, ...]

    @property
    def values(self) -> tuple[Value, ...]:
        return tuple(p.value for p in self.pts)


@dataclass(frozen=True)
class DetectedList:
    """A chain of materialized nodes and list invariants starting at ``head``.

    ``end`` is the pointer stored in the last piece's recursive field.
    """
    head: Value
    elem_ty: StructType
    pieces: tuple[ListNode | ListInvariant, ...]
    end: Value

    @property
    def nodes(self) -> tuple[ListNode, ...]:
        return tuple(x for x in self.pieces if isinstance(x, ListNode))

    @property
    def invariants(self) -> tuple[ListInvariant, ...]:
        return tuple(x for x in self.pieces if isinstance(x, ListInvariant))

    @property
    def total_len(self) -> LinTerm:
        n = LinTerm.of(len(self.nodes))
        for inv in self.invariants:
            n = n + inv.length
        return n

    @staticmethod
    def _vals(x) -> tuple[tuple[Value, ...], tuple[Value, ...]]:
        return (x.values, x.values) if isinstance(x, ListNode) else (x.firsts, x.lasts)

    @property
    def firsts(self) -> tuple[Value, ...]:
        return self._vals(self.pieces[0])[0]

    @property
    def lasts(self) -> tuple[Value, ...]:
        return self._vals(self.pieces[-1])[1]

    @property
    def const_len(self) -> int | None:
        return None if self.invariants else len(self.nodes)

    def components(self) -> set:
        out: set = set()
        for x in self.pieces:
            if isinstance(x, ListNode):
                out.add(x.alloc)
                out |= set(x.pts)
            else:
                out.add(x)
        return out


def follow_list(p: Program, s: AbstractState, head: Value, elem_ty: StructType,
                max_nodes: int = 64, stop: Value | None = None) -> DetectedList | None:
    """Walk nodes and list invariants from ``head`` until null or ``stop``.

    Every materialized node must be a whole allocation of ``sizeof(elem_ty)``
    bytes with a points-to entry for each field.  Returns None on anything
    else (including an empty chain and cycles).
    """
    rec = p.recursive_field(elem_ty)
    if rec is None:
        return None
    lay = p.layout(elem_ty)
    ftys = p.fields(elem_ty)
    size = lay.size
    pieces: list = []
    seen: list[Value] = []
    cur: Value = head
    for _ in range(max_nodes + 1):
        if is_null(s.kb, cur) or (stop is not None and same(s.kb, cur, stop)):
            break
        if len(pieces) == max_nodes or any(same(s.kb, a, cur) for a in seen):
            return None
        seen.append(cur)
        inv = find_list(s, cur, elem_ty)
        if inv is not None:
            pieces.append(inv)
            cur = inv.fields[rec].last
            continue
        alloc = find_alloc_exact(s, cur, size)
        if alloc is None:
            return None
        pts = []
        for off, fty in zip(lay.offsets, ftys):
            pt = find_pt(s, LinTerm.of(cur) + off, fty)
            if pt is None:
                return None
            pts.append(pt)
        pieces.append(ListNode(cur, alloc, tuple(pts)))
        cur = pts[rec].value
    else:
        return None
    if not pieces:
        return None
    return DetectedList(head, elem_ty, tuple(pieces), cur)


# --------------------------------------------------------------- well-formedness

def audit(p: Program, s: AbstractState) -> list[str]:
    """Well-formedness problems of ``s`` (empty list when fine)."""
    problems = []
    vals = list(s.lv.values())
    if len(set(vals)) != len(vals):
        problems.append("LV is not injective")
    for a in s.al:
        if not entails(s.kb, le(a.lo, a.hi)):
            problems.append(f"allocation {a} lacks lo <= hi")
    for inv in s.li:
        lay = p.layout(inv.elem_ty)
        ftys = p.fields(inv.elem_ty)
        if tuple(f.off for f in inv.fields) != lay.offsets or tuple(f.ty for f in inv.fields) != ftys:
            problems.append(f"invariant {inv} does not match the layout of {inv.elem_ty}")
        if p.recursive_field(inv.elem_ty) != inv.rec_index or \
                inv.fields[inv.rec_index].ty != PtrType(inv.elem_ty):
            problems.append(f"invariant {inv} has a bad recursive field")
        if not entails(s.kb, le(1, inv.length)):
            problems.append(f"invariant {inv} lacks 1 <= length")
    for pt in s.pt:
        if region_of(s, pt.addr, sizeof(p, pt.ty)) is None:
            problems.append(f"points-to {pt} outside every allocation")
    return problems


def fresh_like(v: SymVar, prefix: str = "") -> SymVar:
    return fresh_var(prefix + (v.hint.split("_", 1)[-1] if "_" in v.hint else v.hint))


__all__ = [
    "Allocation", "PointsTo", "ListField", "ListInvariant", "AbstractState", "Position",
    "ERR", "ErrState", "Value", "format_state", "find_pt", "region_of", "disjoint",
    "find_alloc_exact", "find_list", "follow_list", "DetectedList", "ListNode", "audit",
    "is_null", "same", "in_range", "fresh_var", "eq",
]
