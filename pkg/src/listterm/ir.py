"""A miniature LLVM-like IR: types, instructions, textual parser, struct layout.

Example::

    list = type { i32, list* }

    define i32 @main() {
    entry:
      n = call i32 @nondet_u32()
      ...
      br label cmpF
    cmpF:
      k = load i32, i32* k_ad
      ...
    }

Registers and labels are bare identifiers (a leading ``%`` is accepted and
dropped).  ``;`` starts a comment.  Integers are mathematical integers, so
``zext``/``sext`` are identities.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


# ---------------------------------------------------------------------- types

@dataclass(frozen=True)
class IntType:
    width: int

    def __str__(self):
        return f"i{self.width}"


@dataclass(frozen=True)
class PtrType:
    pointee: "IrType"

    def __str__(self):
        return f"{self.pointee}*"


@dataclass(frozen=True)
class StructType:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class VoidType:
    def __str__(self):
        return "void"


IrType = Union[IntType, PtrType, StructType, VoidType]

I1, I8, I32, I64 = IntType(1), IntType(8), IntType(32), IntType(64)
INT_WIDTHS = (1, 8, 32, 64)


@dataclass(frozen=True)
class Layout:
    offsets: tuple[int, ...]
    size: int
    align: int


# ------------------------------------------------------------------- operands

@dataclass(frozen=True)
class Reg:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: int
    is_null: bool = False

    def __str__(self):
        return "null" if self.is_null else str(self.value)


Operand = Union[Reg, Const]


# --------------------------------------------------------------- instructions

PREDICATES = ("eq", "ne", "ult", "ule", "ugt", "uge", "slt", "sle", "sgt", "sge")
NONDET = {"nondet_i32": I32, "nondet_u32": I32, "nondet_uint": I32, "nondet_i64": I64}


@dataclass(frozen=True)
class Load:
    dest: str
    ty: IrType
    ptr: Operand

    def __str__(self):
        return f"{self.dest} = load {self.ty}, {PtrType(self.ty)} {self.ptr}"


@dataclass(frozen=True)
class Store:
    ty: IrType
    value: Operand
    ptr: Operand

    def __str__(self):
        return f"store {self.ty} {self.value}, {PtrType(self.ty)} {self.ptr}"


@dataclass(frozen=True)
class ICmp:
    dest: str
    pred: str
    ty: IrType
    lhs: Operand
    rhs: Operand

    def __str__(self):
        return f"{self.dest} = icmp {self.pred} {self.ty} {self.lhs}, {self.rhs}"


@dataclass(frozen=True)
class BinOp:
    dest: str
    op: str  # add | sub | mul
    ty: IrType
    lhs: Operand
    rhs: Operand

    def __str__(self):
        return f"{self.dest} = {self.op} {self.ty} {self.lhs}, {self.rhs}"


@dataclass(frozen=True)
class Alloca:
    dest: str
    ty: IrType

    def __str__(self):
        return f"{self.dest} = alloca {self.ty}"


@dataclass(frozen=True)
class Cast:
    dest: str
    op: str  # bitcast | zext | sext
    from_ty: IrType
    value: Operand
    to_ty: IrType

    def __str__(self):
        return f"{self.dest} = {self.op} {self.from_ty} {self.value} to {self.to_ty}"


@dataclass(frozen=True)
class GepField:
    """``getelementptr S, S* base, i32 0, i32 k``: address of field k."""
    dest: str
    struct: StructType
    base: Operand
    index: int

    def __str__(self):
        return (f"{self.dest} = getelementptr {self.struct}, {PtrType(self.struct)} "
                f"{self.base}, i32 0, i32 {self.index}")


@dataclass(frozen=True)
class GepByte:
    """``getelementptr i8, i8* base, i64 k``: byte-offset arithmetic."""
    dest: str
    base: Operand
    offset: Operand

    def __str__(self):
        return f"{self.dest} = getelementptr i8, i8* {self.base}, i64 {self.offset}"


@dataclass(frozen=True)
class Malloc:
    dest: str
    size: Operand

    def __str__(self):
        return f"{self.dest} = call i8* @malloc(i64 {self.size})"


@dataclass(frozen=True)
class Nondet:
    dest: str
    ty: IrType
    func: str

    @property
    def unsigned(self) -> bool:
        return self.func in ("nondet_u32", "nondet_uint")

    def __str__(self):
        return f"{self.dest} = call {self.ty} @{self.func}()"


@dataclass(frozen=True)
class Br:
    cond: Operand
    if_true: str
    if_false: str

    def __str__(self):
        return f"br i1 {self.cond}, label {self.if_true}, label {self.if_false}"


@dataclass(frozen=True)
class Jump:
    target: str

    def __str__(self):
        return f"br label {self.target}"


@dataclass(frozen=True)
class Ret:
    ty: IrType
    value: Operand | None

    def __str__(self):
        return "ret void" if self.value is None else f"ret {self.ty} {self.value}"


Instruction = Union[Load, Store, ICmp, BinOp, Alloca, Cast, GepField, GepByte,
                    Malloc, Nondet, Br, Jump, Ret]
TERMINATORS = (Br, Jump, Ret)


def successors(instr: Instruction) -> tuple[str, ...]:
    if isinstance(instr, Br):
        return (instr.if_true, instr.if_false)
    if isinstance(instr, Jump):
        return (instr.target,)
    return ()


# -------------------------------------------------------------------- program

@dataclass
class Program:
    types: dict[str, tuple[IrType, ...]]
    blocks: dict[str, list[Instruction]]
    entry: str
    ret_type: IrType = I32
    _layouts: dict[str, Layout] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in self.types:
            self.layout(StructType(name))

    def layout(self, ty: StructType) -> Layout:
        if ty.name not in self._layouts:
            if ty.name not in self.types:
                raise KeyError(f"unknown struct type {ty.name}")
            off = 0
            offsets = []
            max_align = 1
            for fty in self.types[ty.name]:
                a = alignof(self, fty)
                off = -(-off // a) * a
                offsets.append(off)
                off += sizeof(self, fty)
                max_align = max(max_align, a)
            size = -(-off // max_align) * max_align
            self._layouts[ty.name] = Layout(tuple(offsets), size, max_align)
        return self._layouts[ty.name]

    def fields(self, ty: StructType) -> tuple[IrType, ...]:
        return self.types[ty.name]

    def recursive_field(self, ty: StructType) -> int | None:
        """Index of the unique field of type ``ty*``, or None."""
        idx = [i for i, f in enumerate(self.types[ty.name]) if f == PtrType(ty)]
        return idx[0] if len(idx) == 1 else None

    def list_types(self) -> list[StructType]:
        return [StructType(n) for n in sorted(self.types)
                if self.recursive_field(StructType(n)) is not None]

    def instr(self, block: str, index: int) -> Instruction:
        return self.blocks[block][index]

    def loop_headers(self) -> frozenset[str]:
        """Targets of back edges found by DFS from the entry block."""
        headers = set()
        state: dict[str, int] = {}
        stack = [(self.entry, iter(successors(self.blocks[self.entry][-1])))]
        state[self.entry] = 1
        while stack:
            b, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[b] = 2
                stack.pop()
                continue
            s = state.get(nxt, 0)
            if s == 1:
                headers.add(nxt)
            elif s == 0:
                state[nxt] = 1
                stack.append((nxt, iter(successors(self.blocks[nxt][-1]))))
        return frozenset(headers)

    def __str__(self):
        lines = []
        for name, fs in self.types.items():
            lines.append(f"{name} = type {{ {', '.join(str(f) for f in fs)} }}")
        lines.append("")
        lines.append(f"define {self.ret_type} @main() {{")
        for label, instrs in self.blocks.items():
            lines.append(f"{label}:")
            for ins in instrs:
                lines.append(f"  {ins}")
        lines.append("}")
        return "\n".join(lines) + "\n"


def sizeof(p: Program, ty: IrType) -> int:
    if isinstance(ty, IntType):
        return 1 if ty.width == 1 else ty.width // 8
    if isinstance(ty, PtrType):
        return 8
    if isinstance(ty, StructType):
        return p.layout(ty).size
    raise ValueError(f"unsized type {ty}")


def alignof(p: Program, ty: IrType) -> int:
    if isinstance(ty, StructType):
        return p.layout(ty).align
    return sizeof(p, ty)


def field_offset(p: Program, ty: StructType, k: int) -> int:
    offs = p.layout(ty).offsets
    if not 0 <= k < len(offs):
        raise IndexError(f"{ty} has no field {k}")
    return offs[k]


# --------------------------------------------------------------------- parser

_IDENT = r"%?[A-Za-z_.][A-Za-z0-9_.]*"
_TOKEN = re.compile(rf"\s*(?:(?P<int>-?\d+)|(?P<id>{_IDENT}\**)|(?P<glob>@[A-Za-z_][A-Za-z0-9_]*)|(?P<p>[{{}}(),=:*]))")


class _Line:
    """Token cursor over one source line."""

    def __init__(self, text: str, lineno: int):
        self.text = text
        self.lineno = lineno
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r}", lineno,
                                 pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start + 1))
            pos = m.end()
        self.i = 0

    def error(self, msg: str) -> ParseError:
        col = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text) + 1
        return ParseError(msg, self.lineno, col)

    def peek(self) -> str | None:
        return self.toks[self.i][1] if self.i < len(self.toks) else None

    def next(self) -> str:
        if self.i >= len(self.toks):
            raise self.error("unexpected end of line")
        t = self.toks[self.i][1]
        self.i += 1
        return t

    def expect(self, s: str):
        t = self.peek()
        if t != s:
            raise self.error(f"expected {s!r}, found {t!r}")
        self.i += 1

    def done(self) -> bool:
        return self.i >= len(self.toks)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.types: dict[str, tuple[IrType, ...]] = {}
        self.blocks: dict[str, list[Instruction]] = {}
        self.block_lines: dict[str, int] = {}
        self.ret_type: IrType = I32

    def parse_type(self, ln: _Line) -> IrType:
        tok = ln.next()
        stars = len(tok) - len(tok.rstrip("*"))
        base = tok.rstrip("*")
        while ln.peek() == "*":
            ln.next()
            stars += 1
        if re.fullmatch(r"i\d+", base):
            w = int(base[1:])
            if w not in INT_WIDTHS:
                raise ln.error(f"unsupported integer width {base}")
            ty: IrType = IntType(w)
        elif base == "void":
            ty = VoidType()
        elif re.fullmatch(_IDENT, base) and not base.startswith("%"):
            ty = StructType(base)
        else:
            raise ln.error(f"bad type {tok!r}")
        for _ in range(stars):
            ty = PtrType(ty)
        return ty

    def operand(self, ln: _Line) -> Operand:
        tok = ln.next()
        if tok == "null":
            return Const(0, True)
        if re.fullmatch(r"-?\d+", tok):
            return Const(int(tok))
        if tok in ("true", "false"):
            return Const(1 if tok == "true" else 0)
        if re.fullmatch(_IDENT, tok):
            return Reg(tok.lstrip("%"))
        raise ln.error(f"bad operand {tok!r}")

    def label(self, ln: _Line) -> str:
        ln.expect("label")
        return ln.next().lstrip("%")

    def parse(self) -> Program:
        lines = self.text.splitlines()
        current: list[Instruction] | None = None
        in_func = False
        entry = None
        for no, raw in enumerate(lines, 1):
            text = raw.split(";", 1)[0]
            if not text.strip():
                continue
            ln = _Line(text, no)
            # optional numbering as in listings: "0: k = load ..."
            if len(ln.toks) > 2 and ln.toks[0][0] == "int" and ln.toks[1][1] == ":":
                ln.i = 2
            first = ln.peek()
            if first == "define":
                ln.next()
                self.ret_type = self.parse_type(ln)
                if ln.next() != "@main":
                    raise ParseError("only @main may be defined", no, 1)
                ln.expect("(")
                ln.expect(")")
                ln.expect("{")
                in_func = True
                continue
            if first == "}" and len(ln.toks) == 1:
                in_func = False
                current = None
                continue
            if len(ln.toks) >= 3 and ln.toks[1][1] == "=" and ln.toks[2][1] == "type":
                self.parse_typedef(ln)
                continue
            if len(ln.toks) == 2 and ln.toks[1][1] == ":" and ln.toks[0][0] == "id":
                name = ln.toks[0][1].lstrip("%")
                if name in self.blocks:
                    raise ParseError(f"duplicate label {name}", no, ln.toks[0][2])
                self.blocks[name] = current = []
                self.block_lines[name] = no
                entry = entry or name
                continue
            if current is None:
                raise ParseError("instruction outside of a block", no, 1)
            if current and isinstance(current[-1], TERMINATORS):
                raise ParseError("instruction after terminator", no, 1)
            current.append(self.parse_instr(ln))
            if not ln.done():
                raise ln.error(f"trailing tokens {ln.peek()!r}")
        if in_func:
            raise ParseError("missing closing brace", len(lines), 1)
        if entry is None:
            raise ParseError("program has no blocks")
        self.validate()
        return Program(dict(self.types), dict(self.blocks), entry, self.ret_type)

    def parse_typedef(self, ln: _Line):
        name = ln.next()
        if not re.fullmatch(r"[A-Za-z_.][A-Za-z0-9_.]*", name) or re.fullmatch(r"i\d+", name):
            raise ln.error(f"bad type name {name!r}")
        if name in self.types:
            raise ln.error(f"duplicate type {name}")
        ln.expect("=")
        ln.expect("type")
        ln.expect("{")
        fields = []
        while ln.peek() != "}":
            fields.append(self.parse_type(ln))
            if ln.peek() == ",":
                ln.next()
            elif ln.peek() != "}":
                raise ln.error("expected ',' or '}'")
        ln.expect("}")
        if not fields:
            raise ln.error(f"empty struct {name}")
        self.types[name] = tuple(fields)

    def parse_instr(self, ln: _Line) -> Instruction:
        first = ln.next()
        if first == "store":
            ty = self.parse_type(ln)
            v = self.operand(ln)
            ln.expect(",")
            self.parse_type(ln)
            return Store(ty, v, self.operand(ln))
        if first == "br":
            if ln.peek() == "label":
                return Jump(self.label(ln))
            self.parse_type(ln)
            c = self.operand(ln)
            ln.expect(",")
            t = self.label(ln)
            ln.expect(",")
            return Br(c, t, self.label(ln))
        if first == "ret":
            ty = self.parse_type(ln)
            if isinstance(ty, VoidType):
                return Ret(ty, None)
            return Ret(ty, self.operand(ln))
        if first in ("call",):
            raise ln.error("call results must be assigned")
        dest = first.lstrip("%")
        if not re.fullmatch(_IDENT, first):
            raise ln.error(f"unknown instruction {first!r}")
        ln.expect("=")
        op = ln.next()
        if op == "load":
            ty = self.parse_type(ln)
            ln.expect(",")
            self.parse_type(ln)
            return Load(dest, ty, self.operand(ln))
        if op == "icmp":
            pred = ln.next()
            if pred not in PREDICATES:
                raise ln.error(f"unknown predicate {pred}")
            ty = self.parse_type(ln)
            a = self.operand(ln)
            ln.expect(",")
            return ICmp(dest, pred, ty, a, self.operand(ln))
        if op in ("add", "sub", "mul"):
            while ln.peek() in ("nsw", "nuw"):
                ln.next()
            ty = self.parse_type(ln)
            a = self.operand(ln)
            ln.expect(",")
            return BinOp(dest, op, ty, a, self.operand(ln))
        if op == "alloca":
            return Alloca(dest, self.parse_type(ln))
        if op in ("bitcast", "zext", "sext"):
            fty = self.parse_type(ln)
            v = self.operand(ln)
            ln.expect("to")
            return Cast(dest, op, fty, v, self.parse_type(ln))
        if op == "getelementptr":
            if ln.peek() == "inbounds":
                ln.next()
            elem = self.parse_type(ln)
            ln.expect(",")
            self.parse_type(ln)
            base = self.operand(ln)
            idx = []
            while ln.peek() == ",":
                ln.next()
                self.parse_type(ln)
                idx.append(self.operand(ln))
            if elem == I8 and len(idx) == 1:
                return GepByte(dest, base, idx[0])
            if isinstance(elem, StructType) and len(idx) == 2:
                if not (isinstance(idx[0], Const) and idx[0].value == 0 and isinstance(idx[1], Const)):
                    raise ln.error("struct getelementptr needs constant indices 0, k")
                return GepField(dest, elem, base, idx[1].value)
            raise ln.error("unsupported getelementptr form")
        if op == "call":
            ty = self.parse_type(ln)
            fn = ln.next()
            ln.expect("(")
            if fn == "@malloc":
                self.parse_type(ln)
                size = self.operand(ln)
                ln.expect(")")
                return Malloc(dest, size)
            name = fn.lstrip("@")
            if name in NONDET:
                ln.expect(")")
                return Nondet(dest, NONDET[name], name)
            raise ln.error(f"unknown function {fn}")
        raise ln.error(f"unknown instruction {op!r}")

    def validate(self):
        def check_type(ty, where):
            while isinstance(ty, PtrType):
                ty = ty.pointee
            if isinstance(ty, StructType) and ty.name not in self.types:
                raise ParseError(f"unknown type {ty.name} in {where}")

        for name, fs in self.types.items():
            for f in fs:
                check_type(f, f"type {name}")
                if f == StructType(name):
                    raise ParseError(f"type {name} contains itself")
        for label, instrs in self.blocks.items():
            if not instrs or not isinstance(instrs[-1], TERMINATORS):
                raise ParseError(f"block {label} lacks a terminator", self.block_lines[label], 1)
            for ins in instrs:
                for t in successors(ins):
                    if t not in self.blocks:
                        raise ParseError(f"branch to undefined label {t}", self.block_lines[label], 1)
                for attr in ("ty", "from_ty", "to_ty", "struct"):
                    if hasattr(ins, attr):
                        check_type(getattr(ins, attr), f"block {label}")
                if isinstance(ins, GepField):
                    n = len(self.types[ins.struct.name])
                    if not 0 <= ins.index < n:
                        raise ParseError(f"field index {ins.index} out of range for {ins.struct}",
                                         self.block_lines[label], 1)


def parse_program(text: str) -> Program:
    return _Parser(text).parse()
