#!/usr/bin/env python3
"""Run every corpus program and compare against its ``; expect:`` header."""
from __future__ import annotations

import argparse
import re
import sys
import time
from pathlib import Path

from listterm import Limits, analyze, parse_program

ROOT = Path(__file__).resolve().parent.parent


def expected(path: Path) -> str | None:
    m = re.search(r"^;\s*expect:\s*(\w+)", path.read_text(), re.M)
    return m.group(1) if m else None


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("corpus", nargs="?", type=Path, default=ROOT / "corpus")
    ap.add_argument("--widen-after", type=int, default=3)
    args = ap.parse_args(argv)
    files = sorted(args.corpus.glob("*.ir"))
    hits = 0
    for f in files:
        want = expected(f)
        t0 = time.perf_counter()
        rep = analyze(parse_program(f.read_text()), Limits(widen_after=args.widen_after))
        dt = time.perf_counter() - t0
        ok = rep.verdict == want
        hits += ok
        cert = "" if rep.certificate_ok is None else f" cert={'ok' if rep.certificate_ok else 'BAD'}"
        print(f"{'ok ' if ok else 'BAD'} {f.name:28} expect={want:14} got={rep.verdict:14} "
              f"{dt:6.2f}s nodes={len(rep.outcome.seg.nodes)}{cert}")
    print(f"{hits}/{len(files)} as expected")
    return 0 if hits == len(files) else 1


if __name__ == "__main__":
    sys.exit(main())
