"""One-step symbolic execution with memory-safety obligations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .constraints import (Constraint, KnowledgeBase, LinTerm, entails, eq, fresh_var, ge, gt,
                          is_satisfiable, le, lt)
from .ir import (Alloca, BinOp, Br, Cast, Const, GepByte, GepField, ICmp, Jump, Load, Malloc,
                 Nondet, Operand, Program, Ret, Store, field_offset, sizeof)
from .state import (AbstractState, Allocation, ListField, ListInvariant, PointsTo, Position,
                    Value, disjoint, find_pt, in_range)


class IRError(Exception):
    """The program is malformed in a way only execution reveals (e.g. undefined register)."""


@dataclass
class StepResult:
    successors: list[tuple[AbstractState, str]] = field(default_factory=list)
    error: str | None = None

    @property
    def is_error(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class SafeIn:
    alloc: Allocation


@dataclass(frozen=True)
class NeedsUnfold:
    inv: ListInvariant


@dataclass(frozen=True)
class Unsafe:
    pass


DerefResult = Union[SafeIn, NeedsUnfold, Unsafe]


def initial_state(p: Program) -> AbstractState:
    return AbstractState(Position(p.entry, 0))


def _val(s: AbstractState, op: Operand) -> LinTerm:
    if isinstance(op, Const):
        return LinTerm.of(op.value)
    if op.name not in s.lv:
        raise IRError(f"register {op.name} used before definition at {s.pos}")
    return LinTerm.of(s.lv[op.name])


def _stored(s: AbstractState, op: Operand) -> Value:
    return op.value if isinstance(op, Const) else s.lv[op.name] if op.name in s.lv else _undef(s, op)


def _undef(s, op):
    raise IRError(f"register {op.name} used before definition at {s.pos}")


def _advance(s: AbstractState, **kw) -> AbstractState:
    return s.with_(pos=Position(s.pos.block, s.pos.index + 1), **kw)


def _assign(s: AbstractState, dest: str, value: LinTerm | None, *extra: Constraint,
            kb: KnowledgeBase | None = None) -> AbstractState:
    v = fresh_var("v_" + dest)
    lv = dict(s.lv)
    lv[dest] = v
    kb = kb if kb is not None else s.kb
    cs = list(extra)
    if value is not None:
        cs.append(eq(v, value))
    return _advance(s, lv=lv, kb=kb.add(*cs))


def _as_var(s: AbstractState, t: LinTerm) -> tuple[object, KnowledgeBase]:
    """A SymVar denoting ``t`` (fresh with a defining equality when needed)."""
    v = t.as_var()
    if v is not None:
        return v, s.kb
    a = fresh_var("v_addr")
    return a, s.kb.add(eq(a, t))


def check_deref(p: Program, s: AbstractState, addr, size: int) -> DerefResult:
    for a in sorted(s.al, key=lambda a: a.lo.id):
        if in_range(s, addr, size, a.lo, a.hi):
            return SafeIn(a)
    for inv in sorted(s.li, key=lambda i: i.head.id):
        n = sizeof(p, inv.elem_ty)
        if in_range(s, addr, size, inv.head, LinTerm.of(inv.head) + (n - 1)):
            return NeedsUnfold(inv)
    return Unsafe()


def unfold_head(p: Program, s: AbstractState, inv: ListInvariant
                ) -> tuple[AbstractState, AbstractState]:
    """Split ``inv`` into (a) a single node, (b) a first node plus a shorter remainder.

    Successors keep the position of ``s``; either may have an unsatisfiable KB.
    """
    size = sizeof(p, inv.elem_ty)
    hi = fresh_var("v_end")
    kb = s.kb.add(eq(hi, LinTerm.of(inv.head) + (size - 1)))
    addrs = []
    for f in inv.fields:
        if f.off == 0:
            addrs.append(inv.head)
        else:
            a = fresh_var("v_fld")
            kb = kb.add(eq(a, LinTerm.of(inv.head) + f.off))
            addrs.append(a)
    li = s.li - {inv}
    al = s.al | {Allocation(inv.head, hi)}
    pts = frozenset(PointsTo(a, f.ty, f.first) for a, f in zip(addrs, inv.fields))

    kb_a = kb.add(eq(inv.length, 1), *(eq(f.first, f.last) for f in inv.fields))
    single = s.with_(al=al, pt=s.pt | pts, li=li, kb=kb_a)

    nhead = fresh_var("v_head")
    nlen = fresh_var("v_len")
    new_fields = []
    for i, f in enumerate(inv.fields):
        u = fresh_var("v_" + ("next" if i == inv.rec_index else "fst"))
        new_fields.append(ListField(f.off, f.ty, u, f.last))
    rest = ListInvariant(nhead, inv.elem_ty, nlen, tuple(new_fields), inv.rec_index)
    kb_b = kb.add(ge(inv.length, 2), eq(nhead, inv.fields[inv.rec_index].first), ge(nhead, 1),
                  eq(nlen, LinTerm.of(inv.length) - 1), ge(nlen, 1))
    more = s.with_(al=al, pt=s.pt | pts, li=li | {rest}, kb=kb_b)
    return single, more


def _refine(s: AbstractState, splits: list[Constraint]) -> StepResult:
    out = []
    for c in splits:
        kb = s.kb.add(c)
        if is_satisfiable(kb):
            out.append((s.with_(kb=kb), "refine"))
    return StepResult(out)


def _compare(s: AbstractState, pred: str, a: LinTerm, b: LinTerm) -> int | list[Constraint]:
    """1/0 when the comparison is decided by KB, else the refinement split."""
    kb = s.kb
    if pred in ("eq", "ne"):
        if entails(kb, eq(a, b)):
            r = 1
        elif entails(kb, lt(a, b)) or entails(kb, gt(a, b)):
            r = 0
        else:
            if entails(kb, ge(a, b)):
                return [eq(a, b), gt(a, b)]
            if entails(kb, le(a, b)):
                return [eq(a, b), lt(a, b)]
            return [lt(a, b), eq(a, b), gt(a, b)]
        return r if pred == "eq" else 1 - r
    c = {"ult": lt, "slt": lt, "ule": le, "sle": le,
         "ugt": gt, "sgt": gt, "uge": ge, "sge": ge}[pred](a, b)
    if entails(kb, c):
        return 1
    neg = c.negations()[0]
    if entails(kb, neg):
        return 0
    return [c, neg]


def _heap_access(p: Program, s: AbstractState, addr: LinTerm, size: int):
    """(allocation, None) / (None, StepResult) for unfold or error."""
    r = check_deref(p, s, addr, size)
    if isinstance(r, SafeIn):
        return r.alloc, None
    if isinstance(r, NeedsUnfold):
        a, b = unfold_head(p, s, r.inv)
        out = [(x, "refine") for x in (a, b) if is_satisfiable(x.kb)]
        return None, StepResult(out)
    return None, StepResult(error=f"cannot prove {size}-byte access at {addr} is allocated")


def step(p: Program, s: AbstractState, malloc_may_fail: bool = False) -> StepResult:
    ins = p.instr(s.pos.block, s.pos.index)

    if isinstance(ins, Ret):
        return StepResult([])

    if isinstance(ins, Jump):
        return StepResult([(s.with_(pos=Position(ins.target, 0)), "eval")])

    if isinstance(ins, Br):
        c = _compare(s, "ne", _val(s, ins.cond), LinTerm.of(0))
        if isinstance(c, list):
            return _refine(s, c)
        return StepResult([(s.with_(pos=Position(ins.if_true if c else ins.if_false, 0)), "eval")])

    if isinstance(ins, ICmp):
        c = _compare(s, ins.pred, _val(s, ins.lhs), _val(s, ins.rhs))
        if isinstance(c, list):
            return _refine(s, c)
        return StepResult([(_assign(s, ins.dest, LinTerm.of(c)), "eval")])

    if isinstance(ins, BinOp):
        a, b = _val(s, ins.lhs), _val(s, ins.rhs)
        if ins.op == "add":
            r = a + b
        elif ins.op == "sub":
            r = a - b
        elif a.is_const():
            r = b * a.const
        elif b.is_const():
            r = a * b.const
        else:
            r = None  # nonlinear: havoc
        return StepResult([(_assign(s, ins.dest, r), "eval")])

    if isinstance(ins, Cast):
        return StepResult([(_assign(s, ins.dest, _val(s, ins.value)), "eval")])

    if isinstance(ins, GepField):
        off = field_offset(p, ins.struct, ins.index)
        return StepResult([(_assign(s, ins.dest, _val(s, ins.base) + off), "eval")])

    if isinstance(ins, GepByte):
        return StepResult([(_assign(s, ins.dest, _val(s, ins.base) + _val(s, ins.offset)), "eval")])

    if isinstance(ins, Nondet):
        v = fresh_var("v_" + ins.dest)
        lv = dict(s.lv)
        lv[ins.dest] = v
        kb = s.kb.add(ge(v, 0)) if ins.unsigned else s.kb
        return StepResult([(_advance(s, lv=lv, kb=kb), "eval")])

    if isinstance(ins, Alloca):
        n = sizeof(p, ins.ty)
        lo, hi, init = fresh_var("v_" + ins.dest), fresh_var(f"v_{ins.dest}_end"), fresh_var("v_init")
        lv = dict(s.lv)
        lv[ins.dest] = lo
        kb = s.kb.add(ge(lo, 1), eq(hi, LinTerm.of(lo) + (n - 1)))
        return StepResult([(_advance(s, lv=lv, kb=kb, al=s.al | {Allocation(lo, hi)},
                                     pt=s.pt | {PointsTo(lo, ins.ty, init)}), "eval")])

    if isinstance(ins, Malloc):
        size = _val(s, ins.size)
        if not entails(s.kb, ge(size, 1)):
            return StepResult(error=f"malloc size {size} not provably positive")
        lo, hi = fresh_var("v_" + ins.dest), fresh_var(f"v_{ins.dest}_end")
        lv = dict(s.lv)
        lv[ins.dest] = lo
        kb = s.kb.add(ge(lo, 1), eq(hi, lo + size - 1))
        ok = _advance(s, lv=lv, kb=kb, al=s.al | {Allocation(lo, hi)})
        if not malloc_may_fail:
            return StepResult([(ok, "eval")])
        return StepResult([(ok, "refine"), (_assign(s, ins.dest, LinTerm.of(0)), "refine")])

    if isinstance(ins, Load):
        addr = _val(s, ins.ptr)
        n = sizeof(p, ins.ty)
        alloc, res = _heap_access(p, s, addr, n)
        if res is not None:
            return res
        pt = find_pt(s, addr, ins.ty)
        if pt is not None:
            return StepResult([(_assign(s, ins.dest, LinTerm.of(pt.value)), "eval")])
        if any(not disjoint(s, q.addr, sizeof(p, q.ty), addr, n) for q in s.pt):
            return StepResult([(_assign(s, ins.dest, None), "eval")])  # type-punned: havoc
        av, kb = _as_var(s, addr)
        v = fresh_var("v_" + ins.dest)
        lv = dict(s.lv)
        lv[ins.dest] = v
        return StepResult([(_advance(s, lv=lv, kb=kb, pt=s.pt | {PointsTo(av, ins.ty, v)}), "eval")])

    if isinstance(ins, Store):
        addr = _val(s, ins.ptr)
        n = sizeof(p, ins.ty)
        alloc, res = _heap_access(p, s, addr, n)
        if res is not None:
            return res
        value = _stored(s, ins.value)
        keep = frozenset(q for q in s.pt if disjoint(s, q.addr, sizeof(p, q.ty), addr, n))
        av, kb = _as_var(s, addr)
        return StepResult([(_advance(s, kb=kb, pt=keep | {PointsTo(av, ins.ty, value)}), "eval")])

    raise IRError(f"unsupported instruction {ins}")
