"""Integer transition systems read off a finished SEG."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .constraints import (FALSE, Constraint, KnowledgeBase, LinTerm, SymVar, entails, eq, fresh_var,
                          project, simplify)
from .seg import Seg, SegEdge
from .state import AbstractState, ErrState

START = "start"


@dataclass
class Transition:
    src: str
    dst: str
    # relation over the source variables and ``primed`` copies of the target variables
    guard: KnowledgeBase
    primed: dict[SymVar, SymVar]
    update: dict[SymVar, LinTerm | None]
    path: tuple[int, ...] = ()

    def label(self) -> str:
        return f"{self.src}->{self.dst}"


@dataclass
class Its:
    locations: dict[str, tuple[SymVar, ...]] = field(default_factory=dict)
    transitions: list[Transition] = field(default_factory=list)
    start: str = START

    def transitions_from(self, loc: str) -> list[Transition]:
        return [t for t in self.transitions if t.src == loc]


def loc_name(node_id: int) -> str:
    return f"l{node_id}"


def location_vars(s: AbstractState) -> tuple[SymVar, ...]:
    return tuple(sorted(s.vars(), key=lambda v: v.id))


def _transition(src: str, src_vars, final: AbstractState, edge: SegEdge, dst_vars,
                path) -> Transition | None:
    primed = {y: fresh_var(y.hint + "'") for y in dst_vars}
    links = []
    for y, yp in primed.items():
        t = (edge.sigma or {}).get(y)
        if t is not None:
            links.append(eq(yp, t))
    rel = final.kb.add(*links)
    guard = simplify(project(rel, set(src_vars) | set(primed.values())))
    if FALSE in guard.constraints:
        return None
    update: dict[SymVar, LinTerm | None] = {}
    for y, yp in primed.items():
        update[yp] = _solve(guard, yp, src_vars)
    return Transition(src, loc_name(edge.dst), guard, primed, update, tuple(path))


def _solve(guard: KnowledgeBase, yp: SymVar, src_vars) -> LinTerm | None:
    """A term over ``src_vars`` equal to ``yp`` under ``guard``, if one is syntactically at hand."""
    srcs = set(src_vars)
    for c in guard:
        if c.rel != "=" or c.term.coeff(yp) == 0:
            continue
        a = c.term.coeff(yp)
        if abs(a) != 1 or not (c.vars() - {yp}) <= srcs:
            continue
        rest = c.term - LinTerm.of(yp) * a
        t = rest * (-a)
        if entails(guard, eq(yp, t)):
            return t
    return None


def extract_its(seg: Seg) -> Its:
    its = Its()
    locs = {seg.root: START}
    for n in seg.generalized():
        locs[n.id] = loc_name(n.id)
    for nid, name in locs.items():
        st = seg.nodes[nid].state
        its.locations[name] = () if nid == seg.root else location_vars(st)
    children: dict[int, list[SegEdge]] = {}
    for e in seg.edges:
        children.setdefault(e.src, []).append(e)
    for nid, name in sorted(locs.items()):
        src_vars = its.locations[name]
        todo = [(nid, (nid,))]
        while todo:
            cur, path = todo.pop()
            node = seg.nodes[cur]
            if isinstance(node.state, ErrState):
                continue
            for e in children.get(cur, ()):
                if e.kind == "generalize":
                    t = _transition(name, src_vars, node.state, e,
                                    its.locations[loc_name(e.dst)], path + (e.dst,))
                    if t is not None:
                        its.transitions.append(t)
                elif e.dst not in locs:
                    todo.append((e.dst, path + (e.dst,)))
    return its


# ------------------------------------------------------------- text format

def _term_str(t: LinTerm, names) -> str:
    parts = []
    for v, a in t.coeffs:
        s = names[v] if a == 1 else f"-{names[v]}" if a == -1 else f"{a}*{names[v]}"
        parts.append(s)
    if t.const != 0 or not parts:
        parts.append(str(t.const))
    out = " + ".join(parts)
    return out.replace("+ -", "- ")


def _constraint_str(c: Constraint, names) -> str:
    pos = LinTerm([(v, a) for v, a in c.term.coeffs if a > 0], max(c.term.const, 0))
    neg = LinTerm([(v, -a) for v, a in c.term.coeffs if a < 0], max(-c.term.const, 0))
    op = {"<": "<", "<=": "<=", "=": "="}[c.rel]
    return f"{_term_str(pos, names)} {op} {_term_str(neg, names)}"


def export_its(its: Its) -> str:
    """Render as ``src(x..) -> dst(e..) :: guard`` lines; havocked arguments stay named."""
    names: dict[SymVar, str] = {}

    def name(v: SymVar) -> str:
        if v not in names:
            base = re.sub(r"[^A-Za-z0-9_]", "_", v.hint or "v").rstrip("_")
            names[v] = f"{base}_{v.id}" + ("p" if v.hint.endswith("'") else "")
        return names[v]

    lines = [f"START: {its.start}"]
    for loc, vs in its.locations.items():
        lines.append(f"LOC: {loc}({', '.join(name(v) for v in vs)})")
    for t in its.transitions:
        src_args = ", ".join(name(v) for v in its.locations[t.src])
        dst_args = []
        for y in its.locations[t.dst]:
            yp = t.primed[y]
            u = t.update.get(yp)
            dst_args.append(name(yp) if u is None else _term_str(u, _Names(name)))
        solved = {yp: u for yp, u in t.update.items() if u is not None}
        guard = [c.substitute(solved) for c in t.guard]
        guard = [c for c in guard if not c.is_true]
        gs = " && ".join(_constraint_str(c, _Names(name)) for c in sorted(guard, key=Constraint.sort_key))
        lines.append(f"{t.src}({src_args}) -> {t.dst}({', '.join(dst_args)})"
                     + (f" :: {gs}" if gs else ""))
    return "\n".join(lines) + "\n"


class _Names:
    def __init__(self, fn):
        self.fn = fn

    def __getitem__(self, v):
        return self.fn(v)


_TERM_RE = re.compile(r"\s*([+-]?)\s*(?:(\d+)\s*\*\s*)?([A-Za-z_][A-Za-z0-9_']*|\d+)")


def _parse_term(s: str, vars_: dict[str, SymVar]) -> LinTerm:
    t = LinTerm()
    s = s.strip()
    pos = 0
    while pos < len(s):
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad term {s!r}")
        sign = -1 if m.group(1) == "-" else 1
        k = int(m.group(2) or 1)
        atom = m.group(3)
        if atom.isdigit():
            t = t + sign * k * int(atom)
        else:
            if atom not in vars_:
                vars_[atom] = fresh_var(atom)
            t = t + LinTerm.of(vars_[atom]) * (sign * k)
        pos = m.end()
    return t


def parse_its(text: str) -> Its:
    """Inverse of :func:`export_its` up to variable identity."""
    its = Its()
    scopes: dict[str, dict[str, SymVar]] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("START:"):
            its.start = line.split(":", 1)[1].strip()
            continue
        if line.startswith("LOC:"):
            m = re.match(r"LOC:\s*(\w+)\((.*)\)$", line)
            names = [a.strip() for a in m.group(2).split(",") if a.strip()]
            vs = {a: fresh_var(a) for a in names}
            scopes[m.group(1)] = vs
            its.locations[m.group(1)] = tuple(vs.values())
            continue
        m = re.match(r"(\w+)\((.*?)\)\s*->\s*(\w+)\((.*?)\)\s*(?:::\s*(.*))?$", line)
        if not m:
            raise ValueError(f"bad transition line {line!r}")
        src, dst = m.group(1), m.group(3)
        local = dict(scopes[src])
        primed = {y: fresh_var(y.hint + "'") for y in its.locations[dst]}
        args = [a for a in m.group(4).split(",") if a.strip()]
        cs, update = [], {}
        for (y, yp), a in zip(primed.items(), args):
            term = _parse_term(a, local)
            cs.append(eq(yp, term))
            update[yp] = term if term.vars() <= set(its.locations[src]) else None
        for g in (m.group(5) or "").split("&&"):
            if g.strip():
                mm = re.match(r"(.*?)(<=|<|=)(.*)$", g.strip())
                lhs, op, rhs = mm.groups()
                cs.append(Constraint(op, _parse_term(lhs, local) - _parse_term(rhs, local)))
        its.transitions.append(Transition(src, dst, KnowledgeBase(cs), primed, update))
    return its
