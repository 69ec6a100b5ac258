import pytest

from listterm.concrete import run, sequence
from listterm.oracle import OracleBounds, concretize, contains
from listterm.seg import build_seg
from listterm.state import ErrState

from conftest import load

INPUTS = [[0], [1, 5], [2, -1, 3], [3, 0, 0, 0], [5, 1, 2, 3, 4, 5]]


def test_interpreter_runs_example(example_program):
    tr = run(example_program, sequence([3, 7, 8, 9]))
    assert tr.status == "returned"
    assert len(tr.states) > 20


def test_interpreter_reports_ub():
    tr = run(load("oob_store.ir"), sequence([]))
    assert tr.status == "ub" and "outside" in tr.message


def test_interpreter_fuel():
    tr = run(load("infinite_counter.ir"), sequence([1]), fuel=200)
    assert tr.status == "fuel"


@pytest.mark.parametrize("name", ["list_create_traverse.ir", "append_then_count.ir",
                                  "search_by_value.ir", "traverse_twice.ir"])
def test_every_concrete_state_is_covered(name):
    p = load(name)
    seg = build_seg(p).seg
    by_pos = {}
    for n in seg.nodes.values():
        if not isinstance(n.state, ErrState):
            by_pos.setdefault(n.state.pos, []).append(n.state)
    for vals in INPUTS:
        tr = run(p, sequence(vals))
        assert tr.status == "returned"
        for c in tr.states:
            assert any(contains(p, g, c) for g in by_pos.get(c.pos, [])), (vals, c.pos)


def test_concretizations_are_contained(example_program):
    seg = build_seg(example_program).seg
    b = OracleBounds(max_len=2, vmin=-1, vmax=2)
    for n in list(seg.nodes.values())[::7]:
        if isinstance(n.state, ErrState):
            continue
        for i, c in enumerate(concretize(example_program, n.state, b)):
            assert contains(example_program, n.state, c)
            if i > 30:
                break


def test_bounds_parsing():
    assert OracleBounds.parse("len=3,vals=-1:2") == OracleBounds(3, -1, 2)
    assert OracleBounds.parse("len=2") == OracleBounds(max_len=2)
    with pytest.raises(ValueError):
        OracleBounds.parse("vals=3:1")
    with pytest.raises(ValueError):
        OracleBounds.parse("size=3")
