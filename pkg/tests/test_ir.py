import pytest
from hypothesis import given
from hypothesis import strategies as st

from listterm.ir import (GepField, I32, IntType, Load, ParseError, PtrType, StructType,
                         field_offset, parse_program, sizeof)

from conftest import corpus_files

LIST = "list = type { i32, list* }\n"


def wrap(body: str, types: str = LIST) -> str:
    return types + "define i32 @main() {\nentry:\n" + body + "\n}\n"


def test_list_layout(example_program):
    lst = StructType("list")
    assert sizeof(example_program, lst) == 16
    assert field_offset(example_program, lst, 1) == 8
    assert example_program.recursive_field(lst) == 1


def test_nested_layout():
    p = parse_program(wrap("  ret i32 0", "t = type { i32, i32, t* }\n"
                                          "u = type { i8, t, i8 }\n"))
    assert p.layout(StructType("t")).offsets == (0, 4, 8)
    assert sizeof(p, StructType("t")) == 16
    assert p.layout(StructType("u")).offsets == (0, 8, 24)
    assert sizeof(p, StructType("u")) == 32


def test_i64_pair():
    p = parse_program(wrap("  ret i32 0", "w = type { i64, i64* }\n"))
    assert field_offset(p, StructType("w"), 1) == 8


def test_field_index_out_of_range(example_program):
    with pytest.raises(IndexError):
        field_offset(example_program, StructType("list"), 2)


def _brute_layout(sizes):
    """Place each field at the first aligned offset past the previous one."""
    offs, end = [], 0
    for s in sizes:
        while end % s:
            end += 1
        offs.append(end)
        end += s
    top = max(sizes)
    while end % top:
        end += 1
    return offs, end


NAMES = {1: "i8", 4: "i32", 8: "i64"}


@given(st.lists(st.sampled_from([1, 4, 8]), min_size=1, max_size=6))
def test_layout_matches_brute_force(sizes):
    p = parse_program(wrap("  ret i32 0", f"s = type {{ {', '.join(NAMES[x] for x in sizes)} }}\n"))
    offs, size = _brute_layout(sizes)
    lay = p.layout(StructType("s"))
    assert list(lay.offsets) == offs and lay.size == size
    for a, b, w in zip(lay.offsets, lay.offsets[1:], sizes):
        assert a + w <= b


def test_parse_instructions(example_program):
    entry = example_program.blocks[example_program.entry]
    assert any(isinstance(i, Load) for b in example_program.blocks.values() for i in b)
    assert any(isinstance(i, GepField) for b in example_program.blocks.values() for i in b)
    assert entry[-1].__class__.__name__ in ("Br", "Jump")
    assert example_program.loop_headers() == frozenset({"cmpF", "cmpW"})


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.name)
def test_print_parse_round_trip(path):
    p = parse_program(path.read_text())
    q = parse_program(str(p))
    assert q.blocks == p.blocks and q.types == p.types and q.entry == p.entry


@pytest.mark.parametrize("src, needle", [
    (wrap("  ret i32 0\n  ret i32 1"), ""),
    (wrap("  br label nowhere"), "nowhere"),
    (wrap("  x = frobnicate i32 1\n  ret i32 0"), "frobnicate"),
    ("define i32 @main() {\nentry:\n  x = alloca missing\n  ret i32 0\n}\n", "missing"),
])
def test_parse_errors(src, needle):
    with pytest.raises(ParseError) as ei:
        parse_program(src)
    assert needle in str(ei.value)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as ei:
        parse_program(wrap("  x = add i32 1,\n  ret i32 0"))
    assert ei.value.line > 0


def test_types_are_values():
    assert PtrType(StructType("list")) == PtrType(StructType("list"))
    assert IntType(32) == I32 and str(PtrType(I32)) == "i32*"
