from listterm.constraints import KnowledgeBase, LinTerm, eq, fresh_var, ge
from listterm.ir import I32, PtrType, StructType
from listterm.state import (ERR, AbstractState, Allocation, ListField, ListInvariant, PointsTo,
                            Position, audit, follow_list, format_state)

from conftest import explore

LIST = StructType("list")


def one_node_state(p):
    """A register ``h`` pointing at a single concrete node whose next field is null."""
    h, hi, nf, v = (fresh_var(n) for n in ("h", "hi", "nf", "v"))
    kb = KnowledgeBase([ge(h, 1), eq(hi, LinTerm.of(h) + 15), eq(nf, LinTerm.of(h) + 8)])
    return AbstractState(Position("entry", 0), {"h": h},
                         frozenset({Allocation(h, hi)}),
                         frozenset({PointsTo(h, I32, v), PointsTo(nf, PtrType(LIST), 0)}),
                         frozenset(), kb)


def test_follow_single_node(example_program):
    s = one_node_state(example_program)
    d = follow_list(example_program, s, s.lv["h"], LIST)
    assert d is not None and len(d.nodes) == 1 and d.end == 0
    assert d.const_len == 1


def test_follow_rejects_cycle(example_program):
    s = one_node_state(example_program)
    nf = next(q.addr for q in s.pt if q.ty == PtrType(LIST))
    s = s.with_(pt=frozenset(q if q.addr != nf else PointsTo(nf, q.ty, s.lv["h"]) for q in s.pt))
    assert follow_list(example_program, s, s.lv["h"], LIST) is None


def test_follow_through_invariant(example_program):
    s = one_node_state(example_program)
    nf = next(q.addr for q in s.pt if q.ty == PtrType(LIST))
    h2, n2, a, b, c = (fresh_var(x) for x in ("h2", "n", "a", "b", "c"))
    inv = ListInvariant(h2, LIST, n2, (ListField(0, I32, a, b), ListField(8, PtrType(LIST), c, 0)), 1)
    s = s.with_(pt=frozenset(q if q.addr != nf else PointsTo(nf, q.ty, h2) for q in s.pt),
                li=frozenset({inv}), kb=s.kb.add(ge(h2, 1), ge(n2, 1)))
    d = follow_list(example_program, s, s.lv["h"], LIST)
    assert d is not None and d.const_len is None
    assert len(d.nodes) == 1 and d.invariants == (inv,)
    assert not audit(example_program, s)


def test_audit_flags_problems(example_program):
    s = one_node_state(example_program)
    assert audit(example_program, s) == []
    x = fresh_var("x")
    bad = s.with_(lv={"a": x, "b": x})
    assert any("injective" in m for m in audit(example_program, bad))
    h, n = fresh_var("h"), fresh_var("n")
    inv = ListInvariant(h, LIST, n, (ListField(0, I32, 0, 0),), 0)
    assert audit(example_program, s.with_(li=frozenset({inv})))


def test_every_explored_state_is_well_formed(example_program):
    for s in explore(example_program, 150):
        assert audit(example_program, s) == [], format_state(s)


def test_format(example_program):
    s = one_node_state(example_program)
    text = format_state(s)
    assert text.startswith("(entry, 0)") and "↪i32" in text
    assert str(ERR) == "ERR"
