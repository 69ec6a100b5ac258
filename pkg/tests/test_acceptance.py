"""Acceptance criteria; each test prints one PASS/FAIL line before asserting."""
import random
import time

import pytest

from listterm import analyze, parse_program
from listterm.constraints import KnowledgeBase, LinTerm, entails, eq, ge, gt, is_satisfiable, le, lt
from listterm.ir import PtrType, StructType, field_offset, sizeof
from listterm.merge import merge_states
from listterm.oracle import OracleBounds, concretize, contains
from listterm.ranking import TERMINATING, check_certificate
from listterm.state import Position
from listterm.symexec import unfold_head

from bruteforce import grid, mask, random_constraint, random_system
from conftest import corpus_files, expected_verdict, explore, load

LIST = StructType("list")


@pytest.fixture
def verdict(capsys):
    def report(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return report


@pytest.fixture(scope="module")
def running():
    p = load("list_create_traverse.ir")
    t0 = time.perf_counter()
    r = analyze(p)
    return p, r, time.perf_counter() - t0


def _cmpf_node(r):
    return next(n for n in r.outcome.seg.generalized() if n.state.pos == Position("cmpF", 0))


def test_1_example_invariant(running, verdict):
    p, r, secs = running
    s = _cmpf_node(r).state
    inv = next(iter(s.li)) if len(s.li) == 1 else None
    shape = inv is not None and \
        [(f.off, f.ty) for f in inv.fields] == [(0, p.fields(LIST)[0]), (8, PtrType(LIST))] and \
        inv.rec_index == 1 and inv.fields[1].last == 0
    kb_ok = inv is not None and entails(s.kb, le(1, inv.length)) and \
        entails(s.kb, eq(inv.length, s.lv["kinc"]))
    ok = r.verdict == TERMINATING and secs < 10 and shape and kb_ok
    verdict(1, ok, f"verdict={r.verdict} in {secs:.2f}s, invariant shape={shape}, "
                   f"KB entails 1<=len and len=kinc: {kb_ok}")


def test_2_refinement_pair(running, verdict):
    _, r, _ = running
    seg = r.outcome.seg
    found = False
    for n in seg.nodes.values():
        if getattr(n.state, "pos", None) != Position("cmpF", 1):
            continue
        kids = [seg.nodes[e.dst].state for e in seg.out_edges(n.id) if e.kind == "refine"]
        v = n.state.lv["n"]
        if len(kids) == 2 and any(entails(k.kb, gt(v, 0)) for k in kids) and \
                any(entails(k.kb, le(v, 0)) for k in kids):
            found = True
    verdict(2, found, "refine successors at (cmpF, 1) entail n>0 and n<=0")


def test_3_layout(running, verdict):
    p, r, _ = running
    s = next(x for x in explore(p, 40) if "k_ad" in x.lv and "tail_ptr" in x.lv)
    spans = {}
    for a in s.al:
        for reg in ("k_ad", "tail_ptr"):
            if a.lo == s.lv[reg]:
                spans[reg] = next(d for d in range(1, 64)
                                  if entails(s.kb, eq(a.hi, LinTerm.of(a.lo) + (d - 1))))
    got = (sizeof(p, LIST), field_offset(p, LIST, 1), spans.get("k_ad"), spans.get("tail_ptr"))
    verdict(3, got == (16, 8, 4, 8), f"sizeof/offset/i32 span/pointer span = {got}")


def test_4_constraints_vs_brute_force(verdict):
    rng = random.Random(2024)
    g = grid(-8, 8)
    t0 = time.perf_counter()
    unsound = systems = 0
    for _ in range(1000):
        cs = random_system(rng)
        kb = KnowledgeBase(cs)
        m = mask(cs, g)
        systems += 1
        if m.any() and not is_satisfiable(kb):
            unsound += 1
        c = random_constraint(rng)
        if entails(kb, c) and (m & ~mask([c], g)).any():
            unsound += 1
    secs = time.perf_counter() - t0
    verdict(4, unsound == 0 and secs < 60,
            f"{systems} systems, {unsound} unsound answers, {secs:.1f}s")


def test_5_oracle_soundness(verdict):
    p = load("list_create_traverse.ir")
    visits = [s for s in explore(p, 400) if s.pos == Position("cmpF", 0)]
    L, M = visits[1], visits[2]
    O, _, _ = merge_states(p, L, M)
    b = OracleBounds(max_len=4, vmin=-2, vmax=4)
    missed = counted = 0
    for side in (L, M):
        for c in concretize(p, side, b):
            counted += 1
            missed += not contains(p, O, c)
    inv = next(iter(O.li))
    one, more = unfold_head(p, O, inv)
    overlap = 0
    n_o = 0
    for c in concretize(p, O, b):
        n_o += 1
        overlap += (contains(p, one, c) + contains(p, more, c)) != 1
    ok = missed == 0 and overlap == 0 and counted > 0 and n_o > 0
    verdict(5, ok, f"L+M: {counted} states, {missed} outside O; "
                   f"O: {n_o} states, {overlap} not covered by exactly one unfold branch")


def test_6_its_and_certificates(running, verdict):
    p, r, _ = running
    its = r.its
    seg = r.outcome.seg
    inc = dec = False
    for t in its.transitions:
        if t.src != t.dst or t.src == its.start:
            continue
        node = seg.nodes[int(t.src[1:])]
        s = node.state
        if s.pos.block == "cmpF":
            k, n = s.lv["k"], s.lv["n"]
            inc |= entails(t.guard, eq(t.primed[k], LinTerm.of(k) + 1)) and entails(t.guard, lt(k, n))
        if s.pos.block == "cmpW":
            for inv in s.li:
                ln = inv.length
                dec |= entails(t.guard, eq(t.primed[ln], LinTerm.of(ln) - 1)) and \
                    entails(t.guard, ge(ln, 2))
    cert = r.termination.certificate
    sccs = {rnd.scc for rnd in cert.rounds}
    cert_ok = r.verdict == TERMINATING and check_certificate(its, cert) and len(sccs) >= 2
    verdict(6, inc and dec and cert_ok,
            f"k'=k+1 under k<n: {inc}; len'=len-1 under len>=2: {dec}; "
            f"{len(sccs)} SCCs ranked, certificate accepted: {cert_ok}")


@pytest.mark.parametrize("name, want", [("while_no_advance.ir", "UNKNOWN"),
                                        ("oob_store.ir", "MEMORY_UNSAFE")])
def test_7_negative_examples(name, want, verdict):
    t0 = time.perf_counter()
    r = analyze(load(name))
    secs = time.perf_counter() - t0
    verdict(7, r.verdict == want and secs < 5, f"{name}: {r.verdict} in {secs:.2f}s (want {want})")


def test_8_corpus(verdict):
    files = corpus_files()
    good = []
    for f in files:
        r = analyze(parse_program(f.read_text()))
        if r.verdict == expected_verdict(f):
            good.append(f.name)
    ok = len(files) >= 12 and len(good) >= 10
    verdict(8, ok, f"{len(good)}/{len(files)} corpus variants got their expected verdict")
