"""Symbolic execution graph construction."""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field

from .constraints import LinTerm, SymVar
from .instance import instance_mapping
from .ir import Program
from .merge import MergeRefused, lossy, merge_states, widen
from .state import ERR, AbstractState, ErrState, format_state
from .symexec import initial_state, step

log = logging.getLogger(__name__)


@dataclass
class Limits:
    widen_after: int = 3
    node_cap: int = 10_000
    malloc_may_fail: bool = False


@dataclass
class SegNode:
    id: int
    state: AbstractState | ErrState
    parent: int | None = None
    generalized: bool = False
    at_header: bool = False
    postponed: int = 0


@dataclass
class SegEdge:
    src: int
    dst: int
    kind: str  # "eval" | "refine" | "generalize"
    # generalize edges: general variable -> term over the source state's variables
    sigma: dict[SymVar, LinTerm] | None = None


@dataclass
class Seg:
    program: Program
    nodes: dict[int, SegNode] = field(default_factory=dict)
    edges: list[SegEdge] = field(default_factory=list)
    root: int = 0
    stats: Counter = field(default_factory=Counter)

    def out_edges(self, n: int) -> list[SegEdge]:
        return [e for e in self.edges if e.src == n]

    def generalized(self) -> list[SegNode]:
        return [n for n in self.nodes.values() if n.generalized]

    def error_node(self) -> SegNode | None:
        return next((n for n in self.nodes.values() if isinstance(n.state, ErrState)), None)


@dataclass
class AnalysisOutcome:
    status: str  # "complete" | "unsafe" | "budget"
    seg: Seg
    diagnostic: str = ""


class _Builder:
    def __init__(self, p: Program, limits: Limits):
        self.p = p
        self.limits = limits
        self.seg = Seg(p)
        self.next_id = 0
        self.stack: list[int] = []
        self.headers = {b for b in p.loop_headers()}
        self.merges_at: Counter = Counter()

    def add(self, state, parent=None, kind=None, **kw) -> SegNode:
        n = SegNode(self.next_id, state, parent, **kw)
        self.next_id += 1
        self.seg.nodes[n.id] = n
        if parent is not None and kind is not None:
            self.seg.edges.append(SegEdge(parent, n.id, kind))
        self.seg.stats["nodes"] += 1
        return n

    def ancestors(self, n: SegNode):
        cur = n.parent
        while cur is not None:
            yield self.seg.nodes[cur]
            cur = self.seg.nodes[cur].parent

    def descendants(self, root: int) -> set[int]:
        children: dict[int, list[int]] = {}
        for m in self.seg.nodes.values():
            if m.parent is not None:
                children.setdefault(m.parent, []).append(m.id)
        out, todo = set(), [root]
        while todo:
            for c in children.get(todo.pop(), ()):
                if c not in out:
                    out.add(c)
                    todo.append(c)
        return out

    def discard_below(self, a: SegNode):
        gone = self.descendants(a.id)
        for i in gone:
            del self.seg.nodes[i]
        requeue = {e.src for e in self.seg.edges
                   if e.kind == "generalize" and e.dst in gone and e.src not in gone}
        self.seg.edges = [e for e in self.seg.edges
                          if e.src not in gone and e.dst not in gone
                          and not (e.kind == "generalize" and e.src in requeue)]
        self.stack = [i for i in self.stack if i not in gone]
        self.stack.extend(sorted(requeue))
        self.seg.stats["discarded"] += len(gone)

    def try_instance(self, n: SegNode) -> bool:
        s = n.state
        for g in sorted(self.seg.generalized(), key=lambda g: -g.id):
            if g.id == n.id or g.state.pos != s.pos:
                continue
            sigma = instance_mapping(self.p, g.state, s)
            if sigma is not None:
                self.seg.edges.append(SegEdge(n.id, g.id, "generalize", sigma))
                self.seg.stats["instances"] += 1
                return True
        return False

    def try_merge(self, n: SegNode) -> bool:
        s = n.state
        anc = next((a for a in self.ancestors(n) if a.at_header and a.state.pos == s.pos
                    and set(a.state.lv) == set(s.lv)), None)
        if anc is None:
            return False
        if n.postponed < self.limits.widen_after and lossy(self.p, anc.state, s):
            n.postponed += 1
            self.seg.stats["postponed"] += 1
            return False
        widening = self.merges_at[s.pos] >= self.limits.widen_after
        try:
            merged, mu_a, _ = merge_states(self.p, anc.state, s, widening)
        except MergeRefused as e:
            log.debug("merge refused: %s", e)
            return False
        self.merges_at[s.pos] += 1
        self.seg.stats["merges"] += 1
        if widening:
            merged = widen(merged)
            self.seg.stats["widenings"] += 1
        self.discard_below(anc)
        g = self.add(merged, anc.id, None, generalized=True, at_header=True,
                     postponed=anc.postponed)
        self.seg.edges.append(SegEdge(anc.id, g.id, "generalize", mu_a))
        self.stack.append(g.id)
        return True

    def run(self) -> AnalysisOutcome:
        root = self.add(initial_state(self.p))
        self.stack.append(root.id)
        while self.stack:
            if len(self.seg.nodes) >= self.limits.node_cap:
                return AnalysisOutcome("budget", self.seg, f"node cap {self.limits.node_cap} reached")
            nid = self.stack.pop()
            if nid not in self.seg.nodes:
                continue
            n = self.seg.nodes[nid]
            s = n.state
            self.seg.stats["visits"] += 1
            if n.at_header and not n.generalized:
                if self.try_instance(n) or self.try_merge(n):
                    continue
            res = step(self.p, s, self.limits.malloc_may_fail)
            if res.is_error:
                self.add(ERR, n.id, "eval")
                return AnalysisOutcome("unsafe", self.seg, f"at {s.pos}: {res.error}")
            for succ, kind in reversed(res.successors):
                header = (kind == "eval" and succ.pos.index == 0 and succ.pos.block in self.headers)
                c = self.add(succ, n.id, kind, at_header=header, postponed=n.postponed)
                self.stack.append(c.id)
        return AnalysisOutcome("complete", self.seg)


def build_seg(p: Program, limits: Limits | None = None) -> AnalysisOutcome:
    return _Builder(p, limits or Limits()).run()


def export_dot(seg: Seg) -> str:
    style = {"eval": "solid", "refine": "dashed", "generalize": "bold"}
    lines = ["digraph seg {", "  node [shape=box, fontname=monospace];"]
    for n in sorted(seg.nodes.values(), key=lambda n: n.id):
        label = format_state(n.state).replace("\\", "\\\\").replace('"', '\\"')
        extra = ", peripheries=2" if n.generalized else ""
        lines.append(f'  n{n.id} [label="{n.id}: {label}"{extra}];')
    for e in seg.edges:
        lines.append(f"  n{e.src} -> n{e.dst} [style={style[e.kind]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_json(seg: Seg) -> str:
    doc = {
        "nodes": [{"id": n.id, "generalized": n.generalized,
                   "position": None if isinstance(n.state, ErrState) else str(n.state.pos),
                   "state": format_state(n.state)}
                  for n in sorted(seg.nodes.values(), key=lambda n: n.id)],
        "edges": [{"src": e.src, "dst": e.dst, "kind": e.kind,
                   "sigma": None if e.sigma is None
                   else {str(k): str(v) for k, v in sorted(e.sigma.items())}}
                  for e in seg.edges],
        "stats": dict(seg.stats),
    }
    return json.dumps(doc, indent=2)
