"""A concrete interpreter over the same memory model the oracle uses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

from .ir import (Alloca, BinOp, Br, Cast, Const, GepByte, GepField, ICmp, Jump, Load, Malloc,
                 Nondet, Operand, Program, Ret, Store, field_offset, sizeof)
from .oracle import PAGE, ConcreteState
from .state import Position


class UndefinedBehavior(Exception):
    pass


@dataclass
class Trace:
    states: list[ConcreteState] = field(default_factory=list)
    status: str = "running"  # "returned" | "ub" | "fuel"
    message: str = ""


def _cmp(pred: str, a: int, b: int) -> bool:
    return {"eq": a == b, "ne": a != b,
            "slt": a < b, "ult": a < b, "sle": a <= b, "ule": a <= b,
            "sgt": a > b, "ugt": a > b, "sge": a >= b, "uge": a >= b}[pred]


class Machine:
    def __init__(self, p: Program, nondet: Callable[[object, bool], int]):
        self.p = p
        self.nondet = nondet
        self.next_page = 1
        self.state = ConcreteState(Position(p.entry, 0))

    def _val(self, op: Operand) -> int:
        if isinstance(op, Const):
            return op.value
        if op.name not in self.state.regs:
            raise UndefinedBehavior(f"register {op.name} undefined")
        return self.state.regs[op.name]

    def _alloc(self, n: int) -> int:
        lo = self.next_page * PAGE
        self.next_page += 1 + n // PAGE
        self.state.blocks.append((lo, lo + n - 1))
        return lo

    def _check(self, addr: int, n: int):
        if self.state.block_of(addr, n) is None:
            raise UndefinedBehavior(f"{n}-byte access at {addr} outside every allocation")

    def _drop_overlapping(self, addr: int, n: int):
        for a in [a for a, (ty, _) in self.state.mem.items()
                  if a < addr + n and addr < a + sizeof(self.p, ty)]:
            del self.state.mem[a]

    def step(self) -> bool:
        """Execute one instruction; False once the program returned."""
        s = self.state
        ins = self.p.instr(s.pos.block, s.pos.index)
        nxt = Position(s.pos.block, s.pos.index + 1)
        regs = s.regs
        if isinstance(ins, Ret):
            return False
        if isinstance(ins, Jump):
            nxt = Position(ins.target, 0)
        elif isinstance(ins, Br):
            nxt = Position(ins.if_true if self._val(ins.cond) else ins.if_false, 0)
        elif isinstance(ins, ICmp):
            regs[ins.dest] = int(_cmp(ins.pred, self._val(ins.lhs), self._val(ins.rhs)))
        elif isinstance(ins, BinOp):
            a, b = self._val(ins.lhs), self._val(ins.rhs)
            regs[ins.dest] = {"add": a + b, "sub": a - b, "mul": a * b}[ins.op]
        elif isinstance(ins, Cast):
            regs[ins.dest] = self._val(ins.value)
        elif isinstance(ins, GepField):
            regs[ins.dest] = self._val(ins.base) + field_offset(self.p, ins.struct, ins.index)
        elif isinstance(ins, GepByte):
            regs[ins.dest] = self._val(ins.base) + self._val(ins.offset)
        elif isinstance(ins, Nondet):
            regs[ins.dest] = self.nondet(ins.ty, ins.unsigned)
        elif isinstance(ins, Alloca):
            lo = self._alloc(sizeof(self.p, ins.ty))
            s.mem[lo] = (ins.ty, 0)
            regs[ins.dest] = lo
        elif isinstance(ins, Malloc):
            n = self._val(ins.size)
            if n < 1:
                raise UndefinedBehavior(f"malloc of {n} bytes")
            regs[ins.dest] = self._alloc(n)
        elif isinstance(ins, Load):
            addr, n = self._val(ins.ptr), sizeof(self.p, ins.ty)
            self._check(addr, n)
            v = s.read(addr, ins.ty)
            if v is None:
                # uninitialized or type-punned: materialize an arbitrary value
                self._drop_overlapping(addr, n)
                v = 0
                s.mem[addr] = (ins.ty, v)
            regs[ins.dest] = v
        elif isinstance(ins, Store):
            addr, n = self._val(ins.ptr), sizeof(self.p, ins.ty)
            self._check(addr, n)
            self._drop_overlapping(addr, n)
            s.mem[addr] = (ins.ty, self._val(ins.value))
        else:
            raise UndefinedBehavior(f"unsupported instruction {ins}")
        s.pos = nxt
        return True

    def snapshot(self) -> ConcreteState:
        s = self.state
        return ConcreteState(s.pos, dict(s.regs), list(s.blocks), dict(s.mem))


def run(p: Program, nondet: Callable[[object, bool], int], fuel: int = 10_000) -> Trace:
    """Execute ``p``; every intermediate state is recorded in the trace."""
    m = Machine(p, nondet)
    tr = Trace([m.snapshot()])
    try:
        for _ in range(fuel):
            if not m.step():
                tr.status = "returned"
                return tr
            tr.states.append(m.snapshot())
    except UndefinedBehavior as e:
        tr.status, tr.message = "ub", str(e)
        return tr
    tr.status = "fuel"
    return tr


def sequence(values: list[int], default: int = 0) -> Callable[[object, bool], int]:
    """A nondet source replaying ``values`` (unsigned requests get the absolute value)."""
    it: Iterator[int] = iter(values)

    def nd(ty, unsigned: bool) -> int:
        v = next(it, default)
        return abs(v) if unsigned else v
    return nd
