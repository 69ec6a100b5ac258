import itertools

import pytest

from listterm.constraints import entails, gt, le
from listterm.ir import parse_program
from listterm.oracle import OracleBounds, concretize, contains
from listterm.seg import build_seg
from listterm.state import Position
from listterm.symexec import IRError, initial_state, step, unfold_head

from conftest import explore, load

PRELUDE = "list = type { i32, list* }\ndefine i32 @main() {\nentry:\n"


def run_straight(src):
    p = parse_program(PRELUDE + src + "\n}\n")
    s = initial_state(p)
    while True:
        res = step(p, s)
        if res.is_error or not res.successors:
            return p, s, res
        s = res.successors[0][0]


def test_refinement_at_loop_test(example_program):
    states = explore(example_program, 40)
    at = [s for s in states if s.pos == Position("cmpF", 1)]
    res = step(example_program, at[0])
    assert [k for _, k in res.successors] == ["refine", "refine"]
    n = at[0].lv["n"]
    kbs = [t.kb for t, _ in res.successors]
    assert any(entails(kb, gt(n, 0)) for kb in kbs)
    assert any(entails(kb, le(n, 0)) for kb in kbs)


def test_store_past_allocation_is_unsafe():
    _, _, res = run_straight("  a = alloca i32\n  b = getelementptr i8, i32* a, i64 4\n"
                             "  store i32 1, i32* b\n  ret i32 0")
    assert res.is_error


def test_null_load_is_unsafe():
    _, _, res = run_straight("  x = load i32, i32* null\n  ret i32 0")
    assert res.is_error


def test_undefined_register():
    with pytest.raises(IRError):
        run_straight("  x = add i32 y, 1\n  ret i32 x")


def test_store_then_load():
    p, s, res = run_straight("  a = alloca i32\n  store i32 7, i32* a\n  x = load i32, i32* a\n"
                             "  ret i32 x")
    assert not res.is_error
    assert entails(s.kb, le(s.lv["x"], 7)) and entails(s.kb, le(7, s.lv["x"]))


def test_malloc_may_fail_adds_null_branch():
    p = parse_program(PRELUDE + "  m = call i8* @malloc(i64 16)\n  ret i32 0\n}\n")
    s = initial_state(p)
    assert len(step(p, s).successors) == 1
    assert len(step(p, s, malloc_may_fail=True).successors) == 2


def test_unfold_partitions_concretization():
    p = load("length_count.ir")
    seg = build_seg(p).seg
    s = next(n.state for n in seg.generalized() if n.state.li)
    inv = next(iter(s.li))
    a, b = unfold_head(p, s, inv)
    bounds = OracleBounds(max_len=3, vmin=-1, vmax=2)
    n = 0
    for c in itertools.islice(concretize(p, s, bounds), 400):
        n += 1
        assert contains(p, a, c) + contains(p, b, c) == 1
    assert n > 0
