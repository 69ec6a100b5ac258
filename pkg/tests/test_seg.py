import json

from listterm.seg import Limits, build_seg, export_dot, export_json
from listterm.state import ErrState

from conftest import load


def test_example_graph_shape(example_program):
    out = build_seg(example_program)
    seg = out.seg
    assert out.status == "complete"
    kinds = {e.kind for e in seg.edges}
    assert kinds == {"eval", "refine", "generalize"}
    gen = seg.generalized()
    assert {n.state.pos.block for n in gen} == {"cmpF", "cmpW"}
    # every leaf either returns or generalizes into an existing node
    has_out = {e.src for e in seg.edges}
    for n in seg.nodes.values():
        if n.id not in has_out:
            ins = example_program.instr(n.state.pos.block, n.state.pos.index)
            assert type(ins).__name__ == "Ret"
    for e in seg.edges:
        assert e.src in seg.nodes and e.dst in seg.nodes
        if e.kind == "generalize":
            assert seg.nodes[e.dst].generalized and e.sigma is not None


def test_generalize_targets_share_position(example_program):
    seg = build_seg(example_program).seg
    for e in seg.edges:
        if e.kind == "generalize":
            assert seg.nodes[e.src].state.pos == seg.nodes[e.dst].state.pos


def test_unsafe_program_reaches_err():
    out = build_seg(load("oob_store.ir"))
    assert out.status == "unsafe"
    assert isinstance(out.seg.error_node().state, ErrState)
    assert out.diagnostic


def test_node_cap():
    out = build_seg(load("list_create_traverse.ir"), Limits(node_cap=20))
    assert out.status == "budget" and "node cap" in out.diagnostic


def test_exports(example_program):
    seg = build_seg(example_program).seg
    dot = export_dot(seg)
    assert dot.startswith("digraph seg {") and dot.rstrip().endswith("}")
    assert dot.count("style=bold") == sum(e.kind == "generalize" for e in seg.edges)
    doc = json.loads(export_json(seg))
    assert len(doc["nodes"]) == len(seg.nodes) and len(doc["edges"]) == len(seg.edges)
    assert doc["stats"]["merges"] >= 2


def test_widen_after_changes_nothing_semantically():
    p = load("append_then_count.ir")
    for k in (1, 2, 5):
        assert build_seg(p, Limits(widen_after=k)).status == "complete"
