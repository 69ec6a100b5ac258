#!/usr/bin/env python3
"""Check merge and unfold soundness on the first loop of a program by bounded concretization.

Takes the 2nd and 3rd visits L, M of the loop header, merges them into O and
verifies that every concrete state of L and M lies in O and that the two unfold
branches of O's list invariant split O's concrete states exactly.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from listterm import parse_program
from listterm.merge import merge_states
from listterm.oracle import OracleBounds, concretize, contains
from listterm.symexec import initial_state, step, unfold_head

ROOT = Path(__file__).resolve().parent.parent


def header_visits(p, block: str, k: int):
    out, stack = [], [initial_state(p)]
    while stack and len(out) < k:
        s = stack.pop()
        if s.pos.block == block and s.pos.index == 0:
            out.append(s)
        res = step(p, s)
        if not res.is_error:
            stack.extend(t for t, _ in reversed(res.successors))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("program", nargs="?", type=Path, default=ROOT / "corpus" / "list_create_traverse.ir")
    ap.add_argument("--header", default="cmpF")
    ap.add_argument("--bounds", type=OracleBounds.parse, default=OracleBounds())
    args = ap.parse_args(argv)
    p = parse_program(args.program.read_text())
    visits = header_visits(p, args.header, 3)
    if len(visits) < 3:
        print(f"fewer than three visits of {args.header}", file=sys.stderr)
        return 2
    L, M = visits[1], visits[2]
    O, _, _ = merge_states(p, L, M)
    bad = 0
    for name, s in (("L", L), ("M", M)):
        t0 = time.perf_counter()
        n = miss = 0
        for c in concretize(p, s, args.bounds):
            n += 1
            miss += not contains(p, O, c)
        print(f"{name}: {n} concrete states, {miss} outside O ({time.perf_counter() - t0:.1f}s)")
        bad += miss
    for inv in sorted(O.li, key=lambda i: i.head.id):
        one, more = unfold_head(p, O, inv)
        t0 = time.perf_counter()
        n = wrong = 0
        for c in concretize(p, O, args.bounds):
            n += 1
            wrong += (contains(p, one, c) + contains(p, more, c)) != 1
        print(f"O unfold at {inv.head}: {n} concrete states, {wrong} not in exactly one branch "
              f"({time.perf_counter() - t0:.1f}s)")
        bad += wrong
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
